#pragma once

// Independent reference computations. None of these call into the library's
// numeric code; they exist to check it.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

namespace pathxai::oracle {

/// 0/1 prediction and label vectors that realize a confusion matrix.
struct BinaryVectors {
  std::vector<int> predictions;
  std::vector<int> labels;
};

inline BinaryVectors realize(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
  BinaryVectors v;
  auto push = [&](std::uint64_t count, int p, int l) {
    for (std::uint64_t i = 0; i < count; ++i) {
      v.predictions.push_back(p);
      v.labels.push_back(l);
    }
  };
  push(tp, 1, 1);
  push(tn, 0, 0);
  push(fp, 1, 0);
  push(fn, 0, 1);
  return v;
}

/// Textbook two-pass Pearson correlation; empty when either side is constant.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

inline std::optional<double> pearson(const std::vector<int>& a, const std::vector<int>& b) {
  return pearson(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
}

/// Adaptive Simpson quadrature with a Richardson-corrected acceptance test.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                               int max_depth = 60) {
  struct Step {
    static double run(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return run(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             run(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Step::run(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Two-sided Student-t tail by integrating the density over [0, |t|].
inline double t_two_sided_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df)) /
                   std::sqrt(df * std::numbers::pi);
  auto density = [&](double x) { return c * std::pow(1.0 + x * x / df, -0.5 * (df + 1.0)); };
  const double a = std::abs(t);
  if (a == 0.0) return 1.0;
  // Split the range so each piece is smooth on its own scale.
  double central = 0.0;
  double lo = 0.0;
  for (double hi : {std::min(a, 1.0), std::min(a, 3.0), a}) {
    if (hi > lo) central += adaptive_simpson(density, lo, hi, 1e-15);
    lo = hi;
  }
  return 1.0 - 2.0 * central;
}

/// Central sample moments and the small-sample-corrected skewness / excess kurtosis.
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  Moments r;
  for (double v : x) r.mean += v;
  r.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - r.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  r.sd = std::sqrt(m2 / (n - 1.0));
  m2 /= n;
  m3 /= n;
  m4 /= n;
  const double b1 = m3 / std::pow(m2, 1.5);
  r.g1 = std::sqrt(n * (n - 1.0)) / (n - 2.0) * b1;
  const double b2 = m4 / (m2 * m2) - 3.0;
  r.g2 = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * b2 + 6.0);
  return r;
}

}  // namespace pathxai::oracle
