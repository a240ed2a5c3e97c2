#include "pathxai/network.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace pathxai {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::conv2d, "conv2d"},
    {LayerKind::maxpool2d, "maxpool2d"},
    {LayerKind::relu, "relu"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::dense, "dense"},
    {LayerKind::flatten, "flatten"},
    {LayerKind::softmax, "softmax"},
    {LayerKind::residual_begin, "residual-begin"},
    {LayerKind::residual_add, "residual-add"},
}};

Shape4 pool_shape(const Shape4& s, const MaxPoolLayer& l) {
  if (l.size == 0 || l.stride == 0 || s.h < l.size || s.w < l.size ||
      (s.h - l.size) % l.stride != 0 || (s.w - l.size) % l.stride != 0) {
    throw ShapeError("maxpool2d: input " + to_string(s) + " not divisible by the pool window");
  }
  return {s.n, s.c, (s.h - l.size) / l.stride + 1, (s.w - l.size) / l.stride + 1};
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

LayerKind kind_of(const Layer& layer) {
  return std::visit(overloaded{
                        [](const Conv2dLayer&) { return LayerKind::conv2d; },
                        [](const MaxPoolLayer&) { return LayerKind::maxpool2d; },
                        [](const ReluLayer&) { return LayerKind::relu; },
                        [](const BatchNormLayer&) { return LayerKind::batchnorm; },
                        [](const DenseLayer&) { return LayerKind::dense; },
                        [](const FlattenLayer&) { return LayerKind::flatten; },
                        [](const SoftmaxLayer&) { return LayerKind::softmax; },
                        [](const ResidualBeginLayer&) { return LayerKind::residual_begin; },
                        [](const ResidualAddLayer&) { return LayerKind::residual_add; },
                    },
                    layer);
}

void Gradients::zero() {
  for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

void Gradients::scale(double s) {
  for (auto& b : blocks) {
    for (double& v : b) v *= s;
  }
}

Network::Network(std::vector<Layer> layers, Shape4 input)
    : layers_(std::move(layers)), input_{1, input.c, input.h, input.w} {
  if (layers_.empty() || kind_of(layers_.back()) != LayerKind::softmax) {
    throw std::invalid_argument("network: the last layer must be softmax");
  }
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    if (kind_of(layers_[i]) == LayerKind::softmax) {
      throw std::invalid_argument("network: softmax is only allowed as the final layer");
    }
  }
  (void)layer_output_shapes();
}

std::vector<Shape4> Network::layer_output_shapes() const {
  std::vector<Shape4> shapes;
  shapes.reserve(layers_.size());
  std::vector<Shape4> skips;
  Shape4 s = input_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + " (" +
                              std::string(to_string(kind_of(layers_[i]))) + "): ";
    try {
      s = std::visit(
          overloaded{
              [&](const Conv2dLayer& l) { return conv2d_output_shape(s, l.params); },
              [&](const MaxPoolLayer& l) { return pool_shape(s, l); },
              [&](const ReluLayer&) { return s; },
              [&](const BatchNormLayer& l) {
                if (l.params.channels() != s.c) {
                  throw ShapeError("batchnorm has " + std::to_string(l.params.channels()) +
                                   " channels, input " + to_string(s));
                }
                return s;
              },
              [&](const DenseLayer& l) {
                if (l.params.in != s.item_size()) {
                  throw ShapeError("dense expects " + std::to_string(l.params.in) +
                                   " inputs, got " + std::to_string(s.item_size()));
                }
                return Shape4{s.n, l.params.out, 1, 1};
              },
              [&](const FlattenLayer&) { return Shape4{s.n, s.item_size(), 1, 1}; },
              [&](const SoftmaxLayer&) {
                if (s.h != 1 || s.w != 1) throw ShapeError("softmax needs (n, k, 1, 1) input");
                return s;
              },
              [&](const ResidualBeginLayer&) {
                skips.push_back(s);
                return s;
              },
              [&](const ResidualAddLayer&) {
                if (skips.empty()) throw ShapeError("residual-add without residual-begin");
                if (skips.back() != s) {
                  throw ShapeError("skip shape " + to_string(skips.back()) +
                                   " differs from branch " + to_string(s));
                }
                skips.pop_back();
                return s;
              },
          },
          layers_[i]);
    } catch (const ShapeError& e) {
      throw ShapeError(where + e.what());
    }
    shapes.push_back(s);
  }
  if (!skips.empty()) throw ShapeError("network: unclosed residual-begin");
  return shapes;
}

std::size_t Network::num_classes() const {
  return layers_.empty() ? 0 : layer_output_shapes().back().c;
}

ForwardCache Network::forward(const Tensor4& input, Mode mode) const {
  const Shape4& in = input.shape();
  if (in.c != input_.c || in.h != input_.h || in.w != input_.w || in.n == 0) {
    throw ShapeError("network expects items of shape " + to_string(input_) + ", got " +
                     to_string(in));
  }
  ForwardCache cache;
  cache.mode = mode;
  cache.activations.reserve(layers_.size() + 1);
  cache.activations.push_back(input);
  cache.pool_argmax.resize(layers_.size());
  cache.batchnorm.resize(layers_.size());
  std::vector<std::size_t> skips;

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Tensor4& x = cache.activations.back();
    Tensor4 y = std::visit(
        overloaded{
            [&](const Conv2dLayer& l) { return conv2d_forward(x, l.params); },
            [&](const MaxPoolLayer& l) {
              auto r = maxpool2d_forward(x, l.size, l.stride);
              cache.pool_argmax[i] = std::move(r.argmax);
              return std::move(r.output);
            },
            [&](const ReluLayer&) { return relu_forward(x); },
            [&](const BatchNormLayer& l) {
              auto r = batchnorm_forward(x, l.params, mode);
              cache.batchnorm[i] = std::move(r.cache);
              return std::move(r.output);
            },
            [&](const DenseLayer& l) { return dense_forward(x, l.params); },
            [&](const FlattenLayer&) {
              return x.reshaped({x.shape().n, x.shape().item_size(), 1, 1});
            },
            [&](const SoftmaxLayer&) { return softmax_rows(x); },
            [&](const ResidualBeginLayer&) {
              skips.push_back(i);
              return x;
            },
            [&](const ResidualAddLayer&) {
              const Tensor4& skip = cache.activations[skips.back()];
              skips.pop_back();
              Tensor4 out = x;
              for (std::size_t k = 0; k < out.size(); ++k) out[k] += skip[k];
              return out;
            },
        },
        layers_[i]);
    cache.activations.push_back(std::move(y));
  }
  return cache;
}

ForwardCache Network::forward_train(const Tensor4& input) {
  ForwardCache cache = forward(input, Mode::train);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (auto* bn = std::get_if<BatchNormLayer>(&layers_[i])) {
      const Shape4& s = cache.activations[i].shape();
      batchnorm_update_running(bn->params, cache.batchnorm[i], s.n * s.plane());
    }
  }
  return cache;
}

Tensor4 Network::backward(const ForwardCache& cache, const Tensor4& grad_logits, Gradients* grads,
                          std::optional<std::size_t> capture_layer, Tensor4* captured) const {
  if (cache.activations.size() != layers_.size() + 1) {
    throw std::invalid_argument("backward: cache does not belong to this network");
  }
  if (grad_logits.shape() != cache.logits().shape()) {
    throw ShapeError("backward: grad_logits shape " + to_string(grad_logits.shape()) +
                     " differs from logits " + to_string(cache.logits().shape()));
  }
  if (capture_layer && *capture_layer + 1 >= layers_.size()) {
    throw std::out_of_range("backward: capture layer must precede the softmax");
  }
  std::vector<std::size_t> block_of(layers_.size(), 0);
  {
    std::size_t b = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      block_of[i] = b;
      const LayerKind k = kind_of(layers_[i]);
      if (k == LayerKind::conv2d || k == LayerKind::batchnorm || k == LayerKind::dense) b += 2;
    }
  }
  auto accumulate = [&](std::size_t block, std::span<const double> g) {
    auto& dst = grads->blocks.at(block);
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  };

  Tensor4 g = grad_logits;
  std::vector<Tensor4> skip_grads;
  for (std::size_t idx = layers_.size() - 1; idx-- > 0;) {
    if (capture_layer && *capture_layer == idx && captured != nullptr) *captured = g;
    const Tensor4& x = cache.activations[idx];
    g = std::visit(
        overloaded{
            [&](const Conv2dLayer& l) {
              auto r = conv2d_backward(x, l.params, g);
              if (grads) {
                accumulate(block_of[idx], r.weight.values());
                accumulate(block_of[idx] + 1, r.bias);
              }
              return std::move(r.input);
            },
            [&](const MaxPoolLayer&) {
              return maxpool2d_backward(x.shape(), cache.pool_argmax[idx], g);
            },
            [&](const ReluLayer&) { return relu_backward(x, g); },
            [&](const BatchNormLayer& l) {
              auto r = batchnorm_backward(cache.batchnorm[idx], l.params, g);
              if (grads) {
                accumulate(block_of[idx], r.gamma);
                accumulate(block_of[idx] + 1, r.beta);
              }
              return std::move(r.input);
            },
            [&](const DenseLayer& l) {
              auto r = dense_backward(x, l.params, g);
              if (grads) {
                accumulate(block_of[idx], r.weight);
                accumulate(block_of[idx] + 1, r.bias);
              }
              return std::move(r.input);
            },
            [&](const FlattenLayer&) { return g.reshaped(x.shape()); },
            [&](const SoftmaxLayer&) -> Tensor4 {
              throw std::logic_error("backward: softmax must be the last layer");
            },
            [&](const ResidualBeginLayer&) {
              Tensor4 out = g;
              const Tensor4& skip = skip_grads.back();
              for (std::size_t k = 0; k < out.size(); ++k) out[k] += skip[k];
              skip_grads.pop_back();
              return out;
            },
            [&](const ResidualAddLayer&) {
              skip_grads.push_back(g);
              return g;
            },
        },
        layers_[idx]);
  }
  return g;
}

std::vector<std::span<double>> Network::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  for (auto& layer : layers_) {
    if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
      blocks.emplace_back(c->params.weight.values());
      blocks.emplace_back(c->params.bias);
    } else if (auto* b = std::get_if<BatchNormLayer>(&layer)) {
      blocks.emplace_back(b->params.gamma);
      blocks.emplace_back(b->params.beta);
    } else if (auto* d = std::get_if<DenseLayer>(&layer)) {
      blocks.emplace_back(d->params.weight);
      blocks.emplace_back(d->params.bias);
    }
  }
  return blocks;
}

std::vector<std::span<const double>> Network::parameter_blocks() const {
  auto blocks = const_cast<Network*>(this)->parameter_blocks();
  return {blocks.begin(), blocks.end()};
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (const auto& b : parameter_blocks()) g.blocks.emplace_back(b.size(), 0.0);
  return g;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : parameter_blocks()) n += b.size();
  return n;
}

void Network::apply_sgd(const Gradients& grads, double learning_rate) {
  auto blocks = parameter_blocks();
  if (blocks.size() != grads.blocks.size()) {
    throw ShapeError("apply_sgd: gradient block count does not match the network");
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) sgd_step(blocks[i], grads.blocks[i], learning_rate);
}

std::vector<std::size_t> Network::conv_layers() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (kind_of(layers_[i]) == LayerKind::conv2d) out.push_back(i);
  }
  return out;
}

std::size_t Network::feature_tap(std::size_t conv_layer) const {
  if (conv_layer >= layers_.size() || kind_of(layers_[conv_layer]) != LayerKind::conv2d) {
    throw std::invalid_argument("layer " + std::to_string(conv_layer) + " is not a conv2d layer");
  }
  for (std::size_t j = conv_layer + 1; j < layers_.size(); ++j) {
    const LayerKind k = kind_of(layers_[j]);
    if (k == LayerKind::relu) return j;
    if (k != LayerKind::batchnorm && k != LayerKind::residual_add) break;
  }
  return conv_layer;
}

}  // namespace pathxai
