#include "pathxai/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pathxai {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t in_c, in_h, in_w;
  std::size_t kh, kw, stride, pad;
  std::size_t out_h, out_w;

  [[nodiscard]] std::size_t rows() const { return in_c * kh * kw; }
  [[nodiscard]] std::size_t cols() const { return out_h * out_w; }
};

ConvGeometry geometry(const Shape4& in, const Conv2dParams& p) {
  const Shape4 out = conv2d_output_shape(in, p);
  return {in.c, in.h, in.w, p.kernel_h(), p.kernel_w(), p.stride, p.padding, out.h, out.w};
}

// Unfolds one image (in_c, in_h, in_w) into a (in_c*kh*kw) x (out_h*out_w) matrix.
void im2col(const double* image, const ConvGeometry& g, double* col) {
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
          double* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = image + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w))
                          ? 0.0
                          : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters-and-adds columns back into image layout.
void col2im(const double* col, const ConvGeometry& g, double* image) {
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.in_c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = col + ((c * g.kh + ki) * g.kw + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ki) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          double* dst = image + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          const double* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kj) - pad;
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dst[static_cast<std::size_t>(ix)] += src[ox];
          }
        }
      }
    }
  }
}

void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": expected shape " + to_string(a) + ", got " +
                     to_string(b));
  }
}

}  // namespace

// ---------------------------------------------------------------- conv2d

Shape4 conv2d_output_shape(const Shape4& in, const Conv2dParams& p) {
  const Shape4& k = p.weight.shape();
  if (k.c != in.c) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(k.c) + " input channels, input has " +
                     std::to_string(in.c));
  }
  if (p.bias.size() != k.n) {
    throw ShapeError("conv2d: bias length " + std::to_string(p.bias.size()) +
                     " does not match " + std::to_string(k.n) + " output channels");
  }
  if (p.stride == 0) throw ShapeError("conv2d: stride must be >= 1");
  const std::size_t ph = in.h + 2 * p.padding;
  const std::size_t pw = in.w + 2 * p.padding;
  if (ph < k.h || pw < k.w) {
    throw ShapeError("conv2d: kernel " + std::to_string(k.h) + "x" + std::to_string(k.w) +
                     " larger than padded input " + std::to_string(ph) + "x" + std::to_string(pw));
  }
  if ((ph - k.h) % p.stride != 0 || (pw - k.w) % p.stride != 0) {
    throw ShapeError("conv2d: (h + 2p - k) / s is not integral for input " + to_string(in));
  }
  return {in.n, k.n, (ph - k.h) / p.stride + 1, (pw - k.w) / p.stride + 1};
}

Tensor4 conv2d_forward(const Tensor4& input, const Conv2dParams& p) {
  const Shape4 out_shape = conv2d_output_shape(input.shape(), p);
  const ConvGeometry g = geometry(input.shape(), p);
  Tensor4 out(out_shape);
  std::vector<double> col(g.rows() * g.cols());
  const ConstMatrixMap weight(p.weight.data(), static_cast<Eigen::Index>(out_shape.c),
                              static_cast<Eigen::Index>(g.rows()));
  const Eigen::Map<const Eigen::VectorXd> bias(p.bias.data(), static_cast<Eigen::Index>(p.bias.size()));
  for (std::size_t n = 0; n < out_shape.n; ++n) {
    im2col(input.item(n).data(), g, col.data());
    const ConstMatrixMap cols(col.data(), static_cast<Eigen::Index>(g.rows()),
                              static_cast<Eigen::Index>(g.cols()));
    MatrixMap o(out.item(n).data(), static_cast<Eigen::Index>(out_shape.c),
                static_cast<Eigen::Index>(g.cols()));
    o.noalias() = weight * cols;
    o.colwise() += bias;
  }
  debug_check_finite(out, "conv2d_forward");
  return out;
}

Conv2dGrads conv2d_backward(const Tensor4& input, const Conv2dParams& p, const Tensor4& grad_out) {
  const Shape4 out_shape = conv2d_output_shape(input.shape(), p);
  require_same_shape(out_shape, grad_out.shape(), "conv2d_backward grad_out");
  const ConvGeometry g = geometry(input.shape(), p);

  Conv2dGrads grads{Tensor4(input.shape()), Tensor4(p.weight.shape()),
                    std::vector<double>(out_shape.c, 0.0)};
  std::vector<double> col(g.rows() * g.cols());
  std::vector<double> grad_col(g.rows() * g.cols());
  const auto out_c = static_cast<Eigen::Index>(out_shape.c);
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const auto cols = static_cast<Eigen::Index>(g.cols());
  const ConstMatrixMap weight(p.weight.data(), out_c, rows);
  MatrixMap grad_weight(grads.weight.data(), out_c, rows);
  Eigen::Map<Eigen::VectorXd> grad_bias(grads.bias.data(), out_c);

  for (std::size_t n = 0; n < out_shape.n; ++n) {
    im2col(input.item(n).data(), g, col.data());
    const ConstMatrixMap unfolded(col.data(), rows, cols);
    const ConstMatrixMap go(grad_out.item(n).data(), out_c, cols);
    grad_weight.noalias() += go * unfolded.transpose();
    grad_bias += go.rowwise().sum();
    MatrixMap gc(grad_col.data(), rows, cols);
    gc.noalias() = weight.transpose() * go;
    col2im(grad_col.data(), g, grads.input.item(n).data());
  }
  return grads;
}

// -------------------------------------------------------------- maxpool2d

MaxPoolResult maxpool2d_forward(const Tensor4& input, std::size_t size, std::size_t stride) {
  const Shape4& s = input.shape();
  if (size == 0 || stride == 0) throw ShapeError("maxpool2d: size and stride must be >= 1");
  if (s.h < size || s.w < size || (s.h - size) % stride != 0 || (s.w - size) % stride != 0) {
    throw ShapeError("maxpool2d: input " + to_string(s) + " not divisible by window " +
                     std::to_string(size) + " / stride " + std::to_string(stride));
  }
  const Shape4 os{s.n, s.c, (s.h - size) / stride + 1, (s.w - size) / stride + 1};
  MaxPoolResult r{Tensor4(os), std::vector<std::size_t>(os.size())};
  std::size_t o = 0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      for (std::size_t oy = 0; oy < os.h; ++oy) {
        for (std::size_t ox = 0; ox < os.w; ++ox, ++o) {
          std::size_t best = input.offset(n, c, oy * stride, ox * stride);
          double best_v = input[best];
          for (std::size_t ky = 0; ky < size; ++ky) {
            for (std::size_t kx = 0; kx < size; ++kx) {
              const std::size_t idx = input.offset(n, c, oy * stride + ky, ox * stride + kx);
              if (input[idx] > best_v) {
                best_v = input[idx];
                best = idx;
              }
            }
          }
          r.output[o] = best_v;
          r.argmax[o] = best;
        }
      }
    }
  }
  return r;
}

Tensor4 maxpool2d_backward(const Shape4& input_shape, std::span<const std::size_t> argmax,
                           const Tensor4& grad_out) {
  if (argmax.size() != grad_out.size()) {
    throw ShapeError("maxpool2d_backward: argmax has " + std::to_string(argmax.size()) +
                     " entries, grad_out has " + std::to_string(grad_out.size()));
  }
  Tensor4 grad_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad_in.size()) throw ShapeError("maxpool2d_backward: argmax out of range");
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

// ------------------------------------------------------------------- relu

Tensor4 relu_forward(const Tensor4& input) {
  Tensor4 out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor4 relu_backward(const Tensor4& input, const Tensor4& grad_out) {
  require_same_shape(input.shape(), grad_out.shape(), "relu_backward grad_out");
  Tensor4 g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > 0.0 ? grad_out[i] : 0.0;
  return g;
}

// -------------------------------------------------------------- batchnorm

BatchNormParams BatchNormParams::identity(std::size_t channels) {
  BatchNormParams p;
  p.gamma.assign(channels, 1.0);
  p.beta.assign(channels, 0.0);
  p.running_mean.assign(channels, 0.0);
  p.running_var.assign(channels, 1.0);
  return p;
}

BatchNormResult batchnorm_forward(const Tensor4& input, const BatchNormParams& p, Mode mode) {
  const Shape4& s = input.shape();
  if (s.c != p.channels() || p.beta.size() != s.c || p.running_mean.size() != s.c ||
      p.running_var.size() != s.c) {
    throw ShapeError("batchnorm: parameters for " + std::to_string(p.channels()) +
                     " channels, input " + to_string(s));
  }
  if (mode == Mode::eval && !p.has_running_stats) {
    throw std::logic_error("batchnorm: eval mode requested before any train step recorded running statistics");
  }
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n * plane);

  BatchNormResult r{Tensor4(s), {}};
  auto& cache = r.cache;
  cache.mode = mode;
  cache.normalized = Tensor4(s);
  cache.mean.assign(s.c, 0.0);
  cache.inv_std.assign(s.c, 0.0);
  if (mode == Mode::train) cache.batch_var.assign(s.c, 0.0);

  for (std::size_t c = 0; c < s.c; ++c) {
    double mean = 0.0;
    double var = 0.0;
    if (mode == Mode::train) {
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* x = input.data() + input.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) mean += x[i];
      }
      mean /= m;
      for (std::size_t n = 0; n < s.n; ++n) {
        const double* x = input.data() + input.offset(n, c, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) var += (x[i] - mean) * (x[i] - mean);
      }
      var /= m;
      cache.batch_var[c] = var;
    } else {
      mean = p.running_mean[c];
      var = p.running_var[c];
    }
    const double inv_std = 1.0 / std::sqrt(var + p.epsilon);
    cache.mean[c] = mean;
    cache.inv_std[c] = inv_std;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = input.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (input[base + i] - mean) * inv_std;
        cache.normalized[base + i] = xh;
        r.output[base + i] = p.gamma[c] * xh + p.beta[c];
      }
    }
  }
  return r;
}

void batchnorm_update_running(BatchNormParams& p, const BatchNormCache& cache, std::size_t count) {
  if (cache.mode != Mode::train) return;
  const double unbias = count > 1 ? static_cast<double>(count) / static_cast<double>(count - 1) : 1.0;
  for (std::size_t c = 0; c < p.channels(); ++c) {
    p.running_mean[c] = (1.0 - p.momentum) * p.running_mean[c] + p.momentum * cache.mean[c];
    p.running_var[c] =
        (1.0 - p.momentum) * p.running_var[c] + p.momentum * cache.batch_var[c] * unbias;
  }
  p.has_running_stats = true;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const BatchNormParams& p,
                                  const Tensor4& grad_out) {
  const Shape4& s = cache.normalized.shape();
  require_same_shape(s, grad_out.shape(), "batchnorm_backward grad_out");
  const std::size_t plane = s.plane();
  const double m = static_cast<double>(s.n * plane);
  BatchNormGrads g{Tensor4(s), std::vector<double>(s.c, 0.0), std::vector<double>(s.c, 0.0)};

  for (std::size_t c = 0; c < s.c; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = grad_out.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += grad_out[base + i];
        sum_gx += grad_out[base + i] * cache.normalized[base + i];
      }
    }
    g.beta[c] = sum_g;
    g.gamma[c] = sum_gx;
    const double scale = p.gamma[c] * cache.inv_std[c];
    for (std::size_t n = 0; n < s.n; ++n) {
      const std::size_t base = grad_out.offset(n, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) {
        if (cache.mode == Mode::train) {
          g.input[base + i] =
              scale * (grad_out[base + i] - sum_g / m - cache.normalized[base + i] * sum_gx / m);
        } else {
          g.input[base + i] = scale * grad_out[base + i];
        }
      }
    }
  }
  return g;
}

// ------------------------------------------------------------------ dense

Tensor4 dense_forward(const Tensor4& input, const DenseParams& p) {
  const Shape4& s = input.shape();
  if (s.item_size() != p.in) {
    throw ShapeError("dense: expects " + std::to_string(p.in) + " inputs per item, got " +
                     std::to_string(s.item_size()));
  }
  if (p.weight.size() != p.in * p.out || p.bias.size() != p.out) {
    throw ShapeError("dense: parameter sizes do not match " + std::to_string(p.out) + "x" +
                     std::to_string(p.in));
  }
  Tensor4 out({s.n, p.out, 1, 1});
  const ConstMatrixMap w(p.weight.data(), static_cast<Eigen::Index>(p.out),
                         static_cast<Eigen::Index>(p.in));
  const Eigen::Map<const Eigen::VectorXd> b(p.bias.data(), static_cast<Eigen::Index>(p.out));
  // Item by item, so an image's output does not depend on what else is in the batch.
  for (std::size_t n = 0; n < s.n; ++n) {
    const Eigen::Map<const Eigen::VectorXd> x(input.item(n).data(), static_cast<Eigen::Index>(p.in));
    Eigen::Map<Eigen::VectorXd> y(out.item(n).data(), static_cast<Eigen::Index>(p.out));
    y.noalias() = w * x;
    y += b;
  }
  debug_check_finite(out, "dense_forward");
  return out;
}

DenseGrads dense_backward(const Tensor4& input, const DenseParams& p, const Tensor4& grad_out) {
  const Shape4& s = input.shape();
  require_same_shape(Shape4{s.n, p.out, 1, 1}, grad_out.shape(), "dense_backward grad_out");
  DenseGrads g{Tensor4(s), std::vector<double>(p.weight.size(), 0.0),
               std::vector<double>(p.out, 0.0)};
  const auto n = static_cast<Eigen::Index>(s.n);
  const auto in = static_cast<Eigen::Index>(p.in);
  const auto out = static_cast<Eigen::Index>(p.out);
  const ConstMatrixMap w(p.weight.data(), out, in);
  const ConstMatrixMap x(input.data(), n, in);
  const ConstMatrixMap go(grad_out.data(), n, out);
  MatrixMap(g.weight.data(), out, in).noalias() = go.transpose() * x;
  Eigen::Map<Eigen::RowVectorXd>(g.bias.data(), out) = go.colwise().sum();
  MatrixMap(g.input.data(), n, in).noalias() = go * w;
  return g;
}

// --------------------------------------------------- softmax and the loss

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  double hi = -std::numeric_limits<double>::infinity();
  for (double z : logits) {
    if (std::isnan(z)) throw NumericError("softmax: NaN logit");
    hi = std::max(hi, z);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - hi);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Tensor4 softmax_rows(const Tensor4& logits) {
  Tensor4 out(logits.shape());
  for (std::size_t n = 0; n < logits.shape().n; ++n) {
    const auto p = softmax(logits.item(n));
    std::copy(p.begin(), p.end(), out.item(n).begin());
  }
  return out;
}

double cross_entropy(std::span<const double> probabilities, std::size_t true_class) {
  if (true_class >= probabilities.size()) {
    throw std::out_of_range("cross_entropy: class index " + std::to_string(true_class) +
                            " out of range");
  }
  constexpr double kFloor = 1e-300;
  return -std::log(std::max(probabilities[true_class], kFloor));
}

std::vector<double> softmax_cross_entropy_grad(std::span<const double> probabilities,
                                               std::size_t true_class) {
  if (true_class >= probabilities.size()) {
    throw std::out_of_range("softmax_cross_entropy_grad: class index out of range");
  }
  std::vector<double> g(probabilities.begin(), probabilities.end());
  g[true_class] -= 1.0;
  return g;
}

// -------------------------------------------------------------------- sgd

void sgd_step(std::span<double> params, std::span<const double> grads, double learning_rate) {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("sgd_step: learning rate must be >= 0");
  if (params.size() != grads.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grads[i];
}

}  // namespace pathxai
