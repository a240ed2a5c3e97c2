#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "pathxai/ops.hpp"
#include "pathxai/rng.hpp"
#include "testing.hpp"

using namespace pathxai;
using pathxai::testing::central_difference;
using pathxai::testing::dot;
using pathxai::testing::random_tensor;
using pathxai::testing::random_vector;
using pathxai::testing::relative_error;

namespace {

// Direct nested-loop cross-correlation used as the conv oracle.
Tensor4 naive_conv(const Tensor4& x, const Conv2dParams& p) {
  const Shape4 s = x.shape();
  const std::size_t kh = p.kernel_h(), kw = p.kernel_w(), oc = p.out_channels();
  const std::size_t oh = (s.h + 2 * p.padding - kh) / p.stride + 1;
  const std::size_t ow = (s.w + 2 * p.padding - kw) / p.stride + 1;
  Tensor4 out({s.n, oc, oh, ow});
  for (std::size_t n = 0; n < s.n; ++n)
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = p.bias[o];
          for (std::size_t c = 0; c < s.c; ++c)
            for (std::size_t a = 0; a < kh; ++a)
              for (std::size_t b = 0; b < kw; ++b) {
                const long r = static_cast<long>(i * p.stride + a) - static_cast<long>(p.padding);
                const long q = static_cast<long>(j * p.stride + b) - static_cast<long>(p.padding);
                if (r < 0 || q < 0 || r >= static_cast<long>(s.h) || q >= static_cast<long>(s.w)) continue;
                acc += x.at(n, c, static_cast<std::size_t>(r), static_cast<std::size_t>(q)) * p.weight.at(o, c, a, b);
              }
          out.at(n, o, i, j) = acc;
        }
  return out;
}

}  // namespace

TEST(Tensor, RejectsMismatchedValueCount) {
  EXPECT_THROW(Tensor4({1, 1, 2, 2}, std::vector<double>(3)), ShapeError);
  Tensor4 t({2, 3, 4, 5});
  EXPECT_EQ(t.size(), 120u);
  EXPECT_EQ(t.offset(1, 2, 3, 4), 119u);
}

TEST(Tensor, SliceAndStackAreInverse) {
  Rng rng(1);
  const Tensor4 t = random_tensor({3, 2, 2, 2}, rng);
  std::vector<Tensor4> items = {t.slice(0, 1), t.slice(1, 1), t.slice(2, 1)};
  EXPECT_EQ(stack(items), t);
}

TEST(Rng, SameSeedSameStreamAndNamedStreamsDiffer) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  EXPECT_NE(derive_seed(7, "data"), derive_seed(7, "init"));
  EXPECT_EQ(derive_seed(7, "data"), derive_seed(7, "data"));
  Rng c(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(c.below(7), 7u);
  }
}

TEST(Conv2d, AllOnesKernelOverThreeByThree) {
  Tensor4 x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Conv2dParams p{Tensor4({1, 1, 3, 3}, 1.0), {0.0}};
  const Tensor4 y = conv2d_forward(x, p);
  ASSERT_EQ(y.shape(), (Shape4{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 45.0);
}

TEST(Conv2d, UnitKernelIsIdentityExactly) {
  Rng rng(2);
  const Tensor4 x = random_tensor({2, 1, 5, 4}, rng);
  Conv2dParams p{Tensor4({1, 1, 1, 1}, 1.0), {0.0}};
  EXPECT_EQ(conv2d_forward(x, p), x);
}

TEST(Conv2d, ZeroKernelGivesBias) {
  Rng rng(3);
  const Tensor4 x = random_tensor({1, 2, 4, 4}, rng);
  Conv2dParams p{Tensor4({2, 2, 3, 3}, 0.0), {0.25, -1.5}, 1, 1};
  const Tensor4 y = conv2d_forward(x, p);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(y[i], 0.25);
    EXPECT_EQ(y[16 + i], -1.5);
  }
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t stride = 1 + rng.below(2);
    const std::size_t pad = rng.below(2);
    const std::size_t h = 5 + 2 * rng.below(3);
    const Tensor4 x = random_tensor({2, 3, h, h}, rng);
    Conv2dParams p{random_tensor({4, 3, 3, 3}, rng), random_vector(4, rng), stride, pad};
    const Tensor4 y = conv2d_forward(x, p);
    const Tensor4 ref = naive_conv(x, p);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2d, ShapeErrorsAreDescriptive) {
  Conv2dParams p{Tensor4({1, 2, 3, 3}), {0.0}};
  try {
    (void)conv2d_forward(Tensor4({1, 3, 5, 5}), p);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos) << e.what();
  }
  Conv2dParams q{Tensor4({1, 1, 3, 3}), {0.0}, 2, 0};
  EXPECT_THROW((void)conv2d_forward(Tensor4({1, 1, 4, 4}), q), ShapeError);
  EXPECT_THROW((void)conv2d_backward(Tensor4({1, 1, 3, 3}), Conv2dParams{Tensor4({1, 1, 3, 3}), {0.0}},
                                     Tensor4({1, 1, 2, 2})),
               ShapeError);
}

TEST(Conv2d, ScalarBackwardIsProductRule) {
  Tensor4 x({1, 1, 1, 1}, {1.5});
  Conv2dParams p{Tensor4({1, 1, 1, 1}, {-2.0}), {0.0}};
  const auto g = conv2d_backward(x, p, Tensor4({1, 1, 1, 1}, {3.0}));
  EXPECT_EQ(g.input[0], -6.0);
  EXPECT_EQ(g.weight[0], 4.5);
  EXPECT_EQ(g.bias[0], 3.0);
}

TEST(Conv2d, ZeroUpstreamGivesZeroGradients) {
  Rng rng(5);
  const Tensor4 x = random_tensor({1, 2, 5, 5}, rng);
  Conv2dParams p{random_tensor({3, 2, 3, 3}, rng), random_vector(3, rng), 1, 1};
  const auto g = conv2d_backward(x, p, Tensor4({1, 3, 5, 5}));
  for (double v : g.input.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.weight.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor4 x = random_tensor({1, 1, 5, 5}, rng);
    Conv2dParams p{random_tensor({1, 1, 3, 3}, rng), random_vector(1, rng), 1, trial % 2 == 0 ? 0u : 1u};
    const Shape4 os = conv2d_output_shape(x.shape(), p);
    const auto c = random_vector(os.size(), rng);
    const auto g = conv2d_backward(x, p, Tensor4(os, c));
    auto f = [&] { return dot(conv2d_forward(x, p).values(), c); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LT(relative_error(g.input[i], central_difference(f, x[i])), 1e-6);
    }
    for (std::size_t i = 0; i < p.weight.size(); ++i) {
      EXPECT_LT(relative_error(g.weight[i], central_difference(f, p.weight[i])), 1e-6);
    }
    EXPECT_LT(relative_error(g.bias[0], central_difference(f, p.bias[0])), 1e-6);
  }
}

TEST(Conv2d, BiasGradientIsChannelSumOfUpstream) {
  Rng rng(7);
  const Tensor4 x = random_tensor({2, 2, 4, 4}, rng);
  Conv2dParams p{random_tensor({3, 2, 3, 3}, rng), random_vector(3, rng), 1, 1};
  const Tensor4 up = random_tensor({2, 3, 4, 4}, rng);
  const auto g = conv2d_backward(x, p, up);
  for (std::size_t o = 0; o < 3; ++o) {
    double s = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 16; ++i) s += up[(n * 3 + o) * 16 + i];
    EXPECT_NEAR(g.bias[o], s, 1e-12);
  }
}

TEST(MaxPool, SingleWindow) {
  const auto r = maxpool2d_forward(Tensor4({1, 1, 2, 2}, {1, 2, 3, 4}));
  ASSERT_EQ(r.output.size(), 1u);
  EXPECT_EQ(r.output[0], 4.0);
}

TEST(MaxPool, RampMatchesWindowMaxOracle) {
  std::vector<double> v(16);
  std::iota(v.begin(), v.end(), 0.0);
  const auto r = maxpool2d_forward(Tensor4({1, 1, 4, 4}, v));
  EXPECT_EQ(r.output.values()[0], 5.0);
  EXPECT_EQ(r.output.values()[1], 7.0);
  EXPECT_EQ(r.output.values()[2], 13.0);
  EXPECT_EQ(r.output.values()[3], 15.0);
}

TEST(MaxPool, TiesRouteToFirstInRowMajorOrder) {
  const Tensor4 x({1, 1, 2, 4}, 2.5);
  const auto r = maxpool2d_forward(x);
  EXPECT_EQ(r.output[0], 2.5);
  EXPECT_EQ(r.output[1], 2.5);
  const Tensor4 g = maxpool2d_backward(x.shape(), r.argmax, Tensor4({1, 1, 1, 2}, {1.0, 2.0}));
  const std::vector<double> expect = {1, 0, 2, 0, 0, 0, 0, 0};
  EXPECT_EQ(std::vector<double>(g.values().begin(), g.values().end()), expect);
}

TEST(MaxPool, OddSizeIsRejected) {
  EXPECT_THROW((void)maxpool2d_forward(Tensor4({1, 1, 3, 4})), ShapeError);
}

TEST(MaxPool, BackwardConservesGradientMass) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor4 x = random_tensor({2, 3, 6, 8}, rng);
    const auto r = maxpool2d_forward(x);
    const Tensor4 up = random_tensor(r.output.shape(), rng);
    const Tensor4 g = maxpool2d_backward(x.shape(), r.argmax, up);
    const double a = std::accumulate(up.values().begin(), up.values().end(), 0.0);
    const double b = std::accumulate(g.values().begin(), g.values().end(), 0.0);
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(MaxPool, BackwardMatchesFiniteDifferencesAwayFromTies) {
  Rng rng(9);
  Tensor4 x = random_tensor({1, 2, 4, 4}, rng);
  const auto r = maxpool2d_forward(x);
  const auto c = random_vector(r.output.size(), rng);
  const Tensor4 g = maxpool2d_backward(x.shape(), r.argmax, Tensor4(r.output.shape(), c));
  auto f = [&] { return dot(maxpool2d_forward(x).output.values(), c); };
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(relative_error(g[i], central_difference(f, x[i]), 1e-6), 1e-6);
  }
}

TEST(Relu, ForwardAndBackward) {
  const Tensor4 x({1, 1, 1, 3}, {-1, 0, 2});
  const Tensor4 y = relu_forward(x);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 2.0);
  const Tensor4 neg({1, 1, 2, 2}, {-1, -2, -3, -4});
  const Tensor4 g = relu_backward(neg, Tensor4({1, 1, 2, 2}, 1.0));
  const Tensor4 yn = relu_forward(neg);
  for (double v : yn.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
}

TEST(Relu, BackwardMatchesFiniteDifferencesAwayFromKink) {
  Rng rng(10);
  Tensor4 x = random_tensor({1, 2, 5, 5}, rng);
  for (auto& v : x.values()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  const auto c = random_vector(x.size(), rng);
  const Tensor4 g = relu_backward(x, Tensor4(x.shape(), c));
  auto f = [&] { return dot(relu_forward(x).values(), c); };
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(relative_error(g[i], central_difference(f, x[i]), 1e-6), 1e-6);
  }
}

TEST(BatchNorm, TrainModeStandardizesEachChannel) {
  Rng rng(11);
  const Tensor4 x = random_tensor({4, 3, 5, 5}, rng, -3.0, 7.0);
  const auto r = batchnorm_forward(x, BatchNormParams::identity(3), Mode::train);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0, s2 = 0.0, vx = 0.0;
    double mx = 0.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) mx += x[(n * 3 + c) * 25 + i];
    mx /= 100.0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) {
        const double v = r.output[(n * 3 + c) * 25 + i];
        s += v;
        s2 += v * v;
        vx += (x[(n * 3 + c) * 25 + i] - mx) * (x[(n * 3 + c) * 25 + i] - mx);
      }
    vx /= 100.0;
    EXPECT_NEAR(s / 100.0, 0.0, 1e-9);
    // Epsilon shrinks the variance by var / (var + eps).
    EXPECT_NEAR(s2 / 100.0, vx / (vx + 1e-5), 1e-6);
    EXPECT_NEAR(s2 / 100.0, 1.0, 1e-4);
  }
}

TEST(BatchNorm, ConstantChannelMapsToShift) {
  BatchNormParams p = BatchNormParams::identity(1);
  p.beta = {0.75};
  const auto r = batchnorm_forward(Tensor4({2, 1, 3, 3}, 4.0), p, Mode::train);
  for (double v : r.output.values()) EXPECT_EQ(v, 0.75);
}

TEST(BatchNorm, EvalWithoutRunningStatsThrows) {
  EXPECT_THROW((void)batchnorm_forward(Tensor4({1, 2, 2, 2}), BatchNormParams::identity(2), Mode::eval),
               std::logic_error);
}

TEST(BatchNorm, RunningStatsUseMomentumAndStayNonNegative) {
  Rng rng(12);
  BatchNormParams p = BatchNormParams::identity(2);
  for (int step = 0; step < 20; ++step) {
    const Tensor4 x = random_tensor({3, 2, 4, 4}, rng, -2.0, 5.0);
    const auto r = batchnorm_forward(x, p, Mode::train);
    const auto before = p.running_mean;
    batchnorm_update_running(p, r.cache, 48);
    for (std::size_t c = 0; c < 2; ++c) {
      EXPECT_NEAR(p.running_mean[c], 0.9 * before[c] + 0.1 * r.cache.mean[c], 1e-12);
      EXPECT_GE(p.running_var[c], 0.0);
    }
  }
  EXPECT_TRUE(p.has_running_stats);
  EXPECT_NO_THROW((void)batchnorm_forward(Tensor4({1, 2, 2, 2}), p, Mode::eval));
}

TEST(BatchNorm, BackwardMatchesFiniteDifferencesInBothModes) {
  Rng rng(13);
  for (Mode mode : {Mode::train, Mode::eval}) {
    Tensor4 x = random_tensor({2, 3, 4, 4}, rng);
    BatchNormParams p = BatchNormParams::identity(3);
    p.gamma = random_vector(3, rng, 0.5, 2.0);
    p.beta = random_vector(3, rng);
    p.running_mean = random_vector(3, rng);
    p.running_var = random_vector(3, rng, 0.5, 2.0);
    p.has_running_stats = true;
    const auto c = random_vector(x.size(), rng);
    const auto r = batchnorm_forward(x, p, mode);
    const auto g = batchnorm_backward(r.cache, p, Tensor4(x.shape(), c));
    auto f = [&] { return dot(batchnorm_forward(x, p, mode).output.values(), c); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_LT(relative_error(g.input[i], central_difference(f, x[i]), 1e-6), 1e-5);
    }
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_LT(relative_error(g.gamma[k], central_difference(f, p.gamma[k])), 1e-5);
      EXPECT_LT(relative_error(g.beta[k], central_difference(f, p.beta[k])), 1e-5);
    }
  }
}

TEST(Dense, HandMatvecAndIdentity) {
  DenseParams p{2, 2, {1, 2, 3, 4}, {0, 0}};
  const Tensor4 y = dense_forward(Tensor4({1, 2, 1, 1}, {1, 1}), p);
  EXPECT_EQ(y[0], 3.0);
  EXPECT_EQ(y[1], 7.0);
  DenseParams id{3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}};
  const Tensor4 x({2, 3, 1, 1}, {0.1, -2, 5, 7, 8, 9});
  EXPECT_EQ(dense_forward(x, id).values()[4], 8.0);
  EXPECT_EQ(dense_forward(x, id).reshaped(x.shape()), x);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
  Rng rng(14);
  Tensor4 x = random_tensor({3, 5, 1, 1}, rng);
  DenseParams p{5, 4, random_vector(20, rng), random_vector(4, rng)};
  const auto c = random_vector(12, rng);
  const auto g = dense_backward(x, p, Tensor4({3, 4, 1, 1}, c));
  auto f = [&] { return dot(dense_forward(x, p).values(), c); };
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LT(relative_error(g.input[i], central_difference(f, x[i])), 1e-8);
  for (std::size_t i = 0; i < p.weight.size(); ++i) {
    EXPECT_LT(relative_error(g.weight[i], central_difference(f, p.weight[i])), 1e-8);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(relative_error(g.bias[i], central_difference(f, p.bias[i])), 1e-8);
}

TEST(Softmax, ClosedFormValues) {
  const auto a = softmax(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  const auto b = softmax(std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(b[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(b[1], 1.0 / 3.0, 1e-15);
  const auto c = softmax(std::vector<double>{1000.0, 0.0});
  EXPECT_TRUE(std::isfinite(c[0]) && std::isfinite(c[1]));
  EXPECT_NEAR(c[0], 1.0, 1e-15);
  EXPECT_NEAR(c[1], 0.0, 1e-15);
  EXPECT_THROW((void)softmax(std::vector<double>{std::nan(""), 0.0}), NumericError);
}

TEST(Softmax, SumsToOneAndIsPermutationEquivariant) {
  Rng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(8);
    auto z = random_vector(k, rng, -30.0, 30.0);
    const auto p = softmax(z);
    double s = 0.0;
    for (double v : p) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    shuffle(perm, rng);
    std::vector<double> zp(k);
    for (std::size_t i = 0; i < k; ++i) zp[i] = z[perm[i]];
    const auto pp = softmax(zp);
    for (std::size_t i = 0; i < k; ++i) EXPECT_DOUBLE_EQ(pp[i], p[perm[i]]);
  }
}

TEST(CrossEntropy, PerfectAndUniformCases) {
  EXPECT_EQ(cross_entropy(std::vector<double>{1.0, 0.0}, 0), 0.0);
  const auto g = softmax_cross_entropy_grad(std::vector<double>{1.0, 0.0}, 0);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.5, 0.5}, 1), 0.693147, 1e-6);
  EXPECT_TRUE(std::isfinite(cross_entropy(std::vector<double>{1.0, 0.0}, 1)));
}

TEST(CrossEntropy, FusedGradientMatchesFiniteDifferences) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + rng.below(4);
    auto z = random_vector(k, rng, -3.0, 3.0);
    const std::size_t y = rng.below(k);
    const auto g = softmax_cross_entropy_grad(softmax(z), y);
    auto f = [&] { return cross_entropy(softmax(z), y); };
    for (std::size_t i = 0; i < k; ++i) EXPECT_LT(relative_error(g[i], central_difference(f, z[i])), 1e-7);
  }
}

TEST(Sgd, ArithmeticCases) {
  std::vector<double> w = {1.0};
  sgd_step(w, std::vector<double>{0.5}, 0.1);
  EXPECT_DOUBLE_EQ(w[0], 0.95);
  sgd_step(w, std::vector<double>{0.0}, 0.1);
  EXPECT_DOUBLE_EQ(w[0], 0.95);
  std::vector<double> q = {1.0};
  sgd_step(q, std::vector<double>{2.0 * q[0]}, 0.1);
  EXPECT_DOUBLE_EQ(q[0], 0.8);
  EXPECT_THROW(sgd_step(q, std::vector<double>{1.0, 2.0}, 0.1), ShapeError);
  EXPECT_THROW(sgd_step(q, std::vector<double>{1.0}, -0.1), std::invalid_argument);
}

TEST(Determinism, KernelsAreBitReproducible) {
  Rng rng(17);
  const Tensor4 x = random_tensor({2, 3, 8, 8}, rng);
  Conv2dParams p{random_tensor({4, 3, 3, 3}, rng), random_vector(4, rng), 1, 1};
  EXPECT_EQ(conv2d_forward(x, p), conv2d_forward(x, p));
  const Tensor4 up = random_tensor({2, 4, 8, 8}, rng);
  EXPECT_EQ(conv2d_backward(x, p, up).weight, conv2d_backward(x, p, up).weight);
}
