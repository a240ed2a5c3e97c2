#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "pathxai/ops.hpp"
#include "pathxai/tensor.hpp"

namespace pathxai {

enum class LayerKind {
  conv2d,
  maxpool2d,
  relu,
  batchnorm,
  dense,
  flatten,
  softmax,
  residual_begin,
  residual_add,
};

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct Conv2dLayer {
  Conv2dParams params;
  friend bool operator==(const Conv2dLayer&, const Conv2dLayer&) = default;
};
struct MaxPoolLayer {
  std::size_t size = 2;
  std::size_t stride = 2;
  friend bool operator==(const MaxPoolLayer&, const MaxPoolLayer&) = default;
};
struct ReluLayer {
  friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};
struct BatchNormLayer {
  BatchNormParams params;
  friend bool operator==(const BatchNormLayer&, const BatchNormLayer&) = default;
};
struct DenseLayer {
  DenseParams params;
  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};
struct FlattenLayer {
  friend bool operator==(const FlattenLayer&, const FlattenLayer&) = default;
};
struct SoftmaxLayer {
  friend bool operator==(const SoftmaxLayer&, const SoftmaxLayer&) = default;
};
/// Marks where an identity skip connection leaves the main path.
struct ResidualBeginLayer {
  friend bool operator==(const ResidualBeginLayer&, const ResidualBeginLayer&) = default;
};
/// Adds the most recent open skip connection back onto the main path.
struct ResidualAddLayer {
  friend bool operator==(const ResidualAddLayer&, const ResidualAddLayer&) = default;
};

using Layer = std::variant<Conv2dLayer, MaxPoolLayer, ReluLayer, BatchNormLayer, DenseLayer,
                           FlattenLayer, SoftmaxLayer, ResidualBeginLayer, ResidualAddLayer>;

LayerKind kind_of(const Layer& layer);

/// Everything a forward pass keeps for backward and for Grad-CAM.
struct ForwardCache {
  Mode mode = Mode::eval;
  /// activations[i] is the input of layer i; activations.back() the network output.
  std::vector<Tensor4> activations;
  std::vector<std::vector<std::size_t>> pool_argmax;  // indexed by layer
  std::vector<BatchNormCache> batchnorm;              // indexed by layer

  [[nodiscard]] const Tensor4& input() const { return activations.front(); }
  [[nodiscard]] const Tensor4& output_of(std::size_t layer) const { return activations.at(layer + 1); }
  [[nodiscard]] const Tensor4& probabilities() const { return activations.back(); }
  /// Input of the final softmax layer.
  [[nodiscard]] const Tensor4& logits() const { return activations.at(activations.size() - 2); }
};

/// Parameter-shaped gradient buffers, aligned with Network::parameter_blocks().
struct Gradients {
  std::vector<std::vector<double>> blocks;

  void zero();
  void scale(double s);
};

/// Ordered layer list ending in softmax. Parameters are owned here; all
/// per-call state goes into a ForwardCache, so const methods are safe to call
/// from several threads at once.
class Network {
 public:
  Network() = default;
  /// Validates the layer list against `input` (n is ignored): shapes must
  /// chain, skips must balance, and the last layer must be softmax.
  Network(std::vector<Layer> layers, Shape4 input);

  [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }
  [[nodiscard]] std::vector<Layer>& layers() { return layers_; }
  [[nodiscard]] std::size_t size() const { return layers_.size(); }
  /// Expected single-item input shape (n = 1).
  [[nodiscard]] const Shape4& input_shape() const { return input_; }
  [[nodiscard]] std::size_t num_classes() const;

  /// Output shape of every layer for a single-item input.
  [[nodiscard]] std::vector<Shape4> layer_output_shapes() const;

  [[nodiscard]] ForwardCache forward(const Tensor4& input, Mode mode) const;
  /// Train-mode forward that also folds batch statistics into batchnorm running stats.
  ForwardCache forward_train(const Tensor4& input);

  /// Backpropagates d(loss)/d(logits). Accumulates parameter gradients into
  /// `grads` when non-null, and copies the gradient with respect to the output
  /// of `capture_layer` into `captured` when requested. Returns d(loss)/d(input).
  Tensor4 backward(const ForwardCache& cache, const Tensor4& grad_logits, Gradients* grads,
                   std::optional<std::size_t> capture_layer = std::nullopt,
                   Tensor4* captured = nullptr) const;

  [[nodiscard]] std::vector<std::span<double>> parameter_blocks();
  [[nodiscard]] std::vector<std::span<const double>> parameter_blocks() const;
  [[nodiscard]] Gradients zero_gradients() const;
  [[nodiscard]] std::size_t parameter_count() const;

  /// Applies one SGD update over all parameter blocks in layer order.
  void apply_sgd(const Gradients& grads, double learning_rate);

  [[nodiscard]] std::vector<std::size_t> conv_layers() const;
  /// Index of the layer whose output is the rectified feature map of conv
  /// layer `conv_layer`: the first ReLU reached through batchnorm or a
  /// residual add, or the conv itself when none follows.
  [[nodiscard]] std::size_t feature_tap(std::size_t conv_layer) const;

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::vector<Layer> layers_;
  Shape4 input_{};
};

}  // namespace pathxai
