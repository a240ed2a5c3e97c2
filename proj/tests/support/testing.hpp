#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "pathxai/network.hpp"
#include "pathxai/rng.hpp"
#include "pathxai/tensor.hpp"

namespace pathxai::testing {

inline Tensor4 random_tensor(Shape4 shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4 t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<double> random_vector(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// The floor keeps exactly-zero gradients (a bias feeding batchnorm, say) from
/// turning central-difference round-off, about 1e-11 here, into a large ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

/// Central difference of f at x[i], restoring x[i] afterwards.
inline double central_difference(const std::function<double()>& f, double& x, double step = 1e-5) {
  const double saved = x;
  x = saved + step;
  const double up = f();
  x = saved - step;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * step);
}

/// Sum of weights[i] * values[i]; the scalar every gradient check differentiates.
inline double dot(std::span<const double> values, std::span<const double> weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) s += values[i] * weights[i];
  return s;
}

/// Three convs (one behind batchnorm, one inside a residual block), pooling,
/// and a dense head; small enough for exhaustive finite differences.
inline Network three_conv_network(std::uint64_t seed, Shape4 input = {1, 2, 8, 8}) {
  Rng rng(seed);
  auto conv = [&](std::size_t in, std::size_t out) {
    Conv2dParams p;
    p.weight = random_tensor({out, in, 3, 3}, rng, -0.5, 0.5);
    p.bias = random_vector(out, rng, -0.1, 0.1);
    p.padding = 1;
    return Conv2dLayer{p};
  };
  BatchNormParams bn = BatchNormParams::identity(3);
  bn.gamma = random_vector(3, rng, 0.5, 1.5);
  bn.beta = random_vector(3, rng, -0.2, 0.2);
  const std::size_t flat = 3 * (input.h / 2) * (input.w / 2);
  DenseParams d;
  d.in = flat;
  d.out = 2;
  d.weight = random_vector(2 * flat, rng, -0.3, 0.3);
  d.bias = random_vector(2, rng, -0.1, 0.1);
  std::vector<Layer> layers = {conv(input.c, 3), BatchNormLayer{bn}, ReluLayer{},   ResidualBeginLayer{},
                               conv(3, 3),       ReluLayer{},        conv(3, 3),    ResidualAddLayer{},
                               ReluLayer{},      MaxPoolLayer{},     FlattenLayer{}, DenseLayer{d},
                               SoftmaxLayer{}};
  return Network(std::move(layers), input);
}

}  // namespace pathxai::testing
