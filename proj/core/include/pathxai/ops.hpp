#pragma once

// Forward and backward kernels for the closed layer set. Every kernel is a
// pure function of its arguments; layer state lives in the parameter structs.

#include <cstddef>
#include <span>
#include <vector>

#include "pathxai/tensor.hpp"

namespace pathxai {

// ---------------------------------------------------------------- conv2d

struct Conv2dParams {
  Tensor4 weight;             // (out_c, in_c, kh, kw)
  std::vector<double> bias;   // out_c
  std::size_t stride = 1;
  std::size_t padding = 0;

  [[nodiscard]] std::size_t out_channels() const { return weight.shape().n; }
  [[nodiscard]] std::size_t in_channels() const { return weight.shape().c; }
  [[nodiscard]] std::size_t kernel_h() const { return weight.shape().h; }
  [[nodiscard]] std::size_t kernel_w() const { return weight.shape().w; }

  friend bool operator==(const Conv2dParams&, const Conv2dParams&) = default;
};

struct Conv2dGrads {
  Tensor4 input;
  Tensor4 weight;
  std::vector<double> bias;
};

/// Output shape of a conv over `in`; throws ShapeError when the geometry does
/// not divide evenly or channels disagree.
Shape4 conv2d_output_shape(const Shape4& in, const Conv2dParams& p);

/// Cross-correlation (no kernel flip) plus per-channel bias.
Tensor4 conv2d_forward(const Tensor4& input, const Conv2dParams& p);

Conv2dGrads conv2d_backward(const Tensor4& input, const Conv2dParams& p, const Tensor4& grad_out);

// -------------------------------------------------------------- maxpool2d

struct MaxPoolResult {
  Tensor4 output;
  /// Flat index into the input of each output element's winner.
  std::vector<std::size_t> argmax;
};

/// Ties resolve to the first maximum in row-major window order.
MaxPoolResult maxpool2d_forward(const Tensor4& input, std::size_t size = 2, std::size_t stride = 2);

Tensor4 maxpool2d_backward(const Shape4& input_shape, std::span<const std::size_t> argmax,
                           const Tensor4& grad_out);

// ------------------------------------------------------------------- relu

Tensor4 relu_forward(const Tensor4& input);
/// Passes gradient where input > 0.
Tensor4 relu_backward(const Tensor4& input, const Tensor4& grad_out);

// -------------------------------------------------------------- batchnorm

enum class Mode { train, eval };

struct BatchNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  /// False until the first train-mode batch has updated the running stats.
  bool has_running_stats = false;

  static BatchNormParams identity(std::size_t channels);
  [[nodiscard]] std::size_t channels() const { return gamma.size(); }

  friend bool operator==(const BatchNormParams&, const BatchNormParams&) = default;
};

struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor4 normalized;              // x_hat
  std::vector<double> mean;        // statistics actually used
  std::vector<double> inv_std;
  std::vector<double> batch_var;   // biased batch variance (train mode only)
};

struct BatchNormResult {
  Tensor4 output;
  BatchNormCache cache;
};

struct BatchNormGrads {
  Tensor4 input;
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Train mode normalizes with batch statistics, eval mode with running stats
/// (throws std::logic_error if none were ever recorded).
BatchNormResult batchnorm_forward(const Tensor4& input, const BatchNormParams& p, Mode mode);

/// Folds a train-mode batch into the running statistics. The running variance
/// tracks the unbiased batch variance.
void batchnorm_update_running(BatchNormParams& p, const BatchNormCache& cache, std::size_t count);

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const BatchNormParams& p,
                                  const Tensor4& grad_out);

// ------------------------------------------------------------------ dense

struct DenseParams {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  friend bool operator==(const DenseParams&, const DenseParams&) = default;
};

struct DenseGrads {
  Tensor4 input;
  std::vector<double> weight;
  std::vector<double> bias;
};

/// Input is (n, in, 1, 1) or any shape whose item size equals `in`; output is (n, out, 1, 1).
Tensor4 dense_forward(const Tensor4& input, const DenseParams& p);
DenseGrads dense_backward(const Tensor4& input, const DenseParams& p, const Tensor4& grad_out);

// --------------------------------------------------- softmax and the loss

/// Max-subtracted softmax; throws NumericError on NaN input.
std::vector<double> softmax(std::span<const double> logits);
/// Row-wise softmax over the channel axis of an (n, k, 1, 1) tensor.
Tensor4 softmax_rows(const Tensor4& logits);

/// -ln p[true_class], clamped away from ln 0.
double cross_entropy(std::span<const double> probabilities, std::size_t true_class);
/// Gradient of cross_entropy(softmax(z)) with respect to z: p - one_hot.
std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               std::size_t true_class);

// -------------------------------------------------------------------- sgd

/// w <- w - lr * g, elementwise. lr must be >= 0.
void sgd_step(std::span<double> params, std::span<const double> grads, double learning_rate);

}  // namespace pathxai
