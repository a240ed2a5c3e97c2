#include "pathxai/models.hpp"

#include <cmath>
#include <stdexcept>

#include "pathxai/rng.hpp"

namespace pathxai {

namespace {

Conv2dLayer conv3x3(std::size_t in, std::size_t out) {
  Conv2dParams p;
  p.weight = Tensor4({out, in, 3, 3});
  p.bias.assign(out, 0.0);
  p.stride = 1;
  p.padding = 1;
  return {std::move(p)};
}

DenseLayer dense(std::size_t in, std::size_t out) {
  DenseParams p;
  p.in = in;
  p.out = out;
  p.weight.assign(in * out, 0.0);
  p.bias.assign(out, 0.0);
  return {std::move(p)};
}

BatchNormLayer batchnorm(std::size_t channels) { return {BatchNormParams::identity(channels)}; }

// conv -> bn -> relu -> conv -> bn -> (+skip) -> relu
void residual_block(std::vector<Layer>& layers, std::size_t width) {
  layers.emplace_back(ResidualBeginLayer{});
  layers.emplace_back(conv3x3(width, width));
  layers.emplace_back(batchnorm(width));
  layers.emplace_back(ReluLayer{});
  layers.emplace_back(conv3x3(width, width));
  layers.emplace_back(batchnorm(width));
  layers.emplace_back(ResidualAddLayer{});
  layers.emplace_back(ReluLayer{});
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::plain_cnn: return "plain-cnn";
    case Family::mini_resnet: return "mini-resnet";
    case Family::mini_vgg: return "mini-vgg";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  if (name == "plain-cnn") return Family::plain_cnn;
  if (name == "mini-resnet") return Family::mini_resnet;
  if (name == "mini-vgg") return Family::mini_vgg;
  return std::nullopt;
}

std::vector<std::size_t> default_widths(Family f) {
  switch (f) {
    case Family::plain_cnn: return {8, 16, 32};
    case Family::mini_resnet: return {8, 16, 16};
    case Family::mini_vgg: return {8, 16, 32};
  }
  return {};
}

std::vector<std::size_t> ArchitectureSpec::resolved_widths() const {
  return widths.empty() ? default_widths(family) : widths;
}

Network build_structure(const ArchitectureSpec& spec) {
  const auto widths = spec.resolved_widths();
  if (widths.empty()) throw std::invalid_argument("architecture needs at least one stage");
  for (auto w : widths) {
    if (w == 0) throw std::invalid_argument("stage width must be positive");
  }
  if (spec.classes < 2) throw std::invalid_argument("at least two classes are required");
  const std::size_t stages = widths.size();
  const std::size_t factor = std::size_t{1} << stages;
  if (spec.height % factor != 0 || spec.width % factor != 0) {
    throw ShapeError("input " + std::to_string(spec.height) + "x" + std::to_string(spec.width) +
                     " is not divisible through " + std::to_string(stages) + " 2x2 pool stages");
  }

  std::vector<Layer> layers;
  std::size_t in = spec.channels;
  switch (spec.family) {
    case Family::plain_cnn:
      // conv -> relu -> pool per stage
      for (auto w : widths) {
        layers.emplace_back(conv3x3(in, w));
        layers.emplace_back(ReluLayer{});
        layers.emplace_back(MaxPoolLayer{});
        in = w;
      }
      break;
    case Family::mini_vgg:
      // two 3x3 convs per stage, then a 2x2 pool
      for (auto w : widths) {
        layers.emplace_back(conv3x3(in, w));
        layers.emplace_back(ReluLayer{});
        layers.emplace_back(conv3x3(w, w));
        layers.emplace_back(ReluLayer{});
        layers.emplace_back(MaxPoolLayer{});
        in = w;
      }
      break;
    case Family::mini_resnet:
      // stem conv per stage, then an identity residual block on all but the
      // first stage; the pool closes the stage.
      for (std::size_t s = 0; s < stages; ++s) {
        layers.emplace_back(conv3x3(in, widths[s]));
        layers.emplace_back(batchnorm(widths[s]));
        layers.emplace_back(ReluLayer{});
        if (s > 0 || stages == 1) residual_block(layers, widths[s]);
        layers.emplace_back(MaxPoolLayer{});
        in = widths[s];
      }
      break;
  }
  const std::size_t fh = spec.height / factor;
  const std::size_t fw = spec.width / factor;
  layers.emplace_back(FlattenLayer{});
  std::size_t features = in * fh * fw;
  if (spec.family == Family::mini_vgg && spec.hidden > 0) {
    layers.emplace_back(dense(features, spec.hidden));
    layers.emplace_back(ReluLayer{});
    features = spec.hidden;
  }
  layers.emplace_back(dense(features, spec.classes));
  layers.emplace_back(SoftmaxLayer{});
  return Network(std::move(layers), {1, spec.channels, spec.height, spec.width});
}

void he_uniform_init(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& layer : net.layers()) {
    if (auto* c = std::get_if<Conv2dLayer>(&layer)) {
      const auto& ks = c->params.weight.shape();
      const double bound = std::sqrt(6.0 / static_cast<double>(ks.c * ks.h * ks.w));
      for (double& v : c->params.weight.values()) v = rng.uniform(-bound, bound);
      std::fill(c->params.bias.begin(), c->params.bias.end(), 0.0);
    } else if (auto* d = std::get_if<DenseLayer>(&layer)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(d->params.in));
      for (double& v : d->params.weight) v = rng.uniform(-bound, bound);
      std::fill(d->params.bias.begin(), d->params.bias.end(), 0.0);
    }
  }
}

Network build(const ArchitectureSpec& spec) {
  Network net = build_structure(spec);
  he_uniform_init(net, spec.seed);
  return net;
}

}  // namespace pathxai
