#include "pathxai/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pathxai/tdist.hpp"

namespace pathxai {

std::vector<double> ItemMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
  return out;
}

std::vector<double> ItemMatrix::row_sums() const {
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r] += at(r, c);
  }
  return out;
}

std::vector<double> ItemMatrix::row_means() const {
  auto out = row_sums();
  for (double& v : out) v /= static_cast<double>(cols);
  return out;
}

double mean(std::span<const double> x) {
  if (x.empty()) throw StatsError("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw StatsError("variance needs at least two observations");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

double cronbach_alpha(const ItemMatrix& items) {
  if (items.rows < 2 || items.cols < 2) {
    throw StatsError("cronbach_alpha needs at least 2 respondents and 2 items");
  }
  if (items.values.size() != items.rows * items.cols) throw StatsError("item matrix size mismatch");
  double item_var = 0.0;
  for (std::size_t c = 0; c < items.cols; ++c) item_var += sample_variance(items.column(c));
  const double total_var = sample_variance(items.row_sums());
  if (total_var == 0.0) throw StatsError("cronbach_alpha: zero total variance");
  const auto k = static_cast<double>(items.cols);
  return k / (k - 1.0) * (1.0 - item_var / total_var);
}

Descriptives descriptives(std::span<const double> x) {
  if (x.size() < 2) throw StatsError("descriptives need at least two observations");
  Descriptives d;
  d.n = x.size();
  d.mean = mean(x);
  const double var = sample_variance(x);
  if (var == 0.0) throw StatsError("zero variance");
  d.sd = std::sqrt(var);

  const auto n = static_cast<double>(x.size());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double dv = v - d.mean;
    m2 += dv * dv;
    m3 += dv * dv * dv;
    m4 += dv * dv * dv * dv;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (x.size() >= 3) {
    const double g1 = m3 / std::pow(m2, 1.5);
    d.skewness = std::sqrt(n * (n - 1.0)) / (n - 2.0) * g1;
  }
  if (x.size() >= 4) {
    const double g2 = m4 / (m2 * m2) - 3.0;
    d.kurtosis = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0);
  }
  return d;
}

CorrelationReport pearson_from_summary(double r, std::size_t n) {
  if (n < 3) throw StatsError("correlation test needs n >= 3");
  if (!(r >= -1.0 && r <= 1.0)) throw StatsError("correlation outside [-1, 1]");
  CorrelationReport c;
  c.n = n;
  c.r = r;
  const double df = static_cast<double>(n - 2);
  if (std::abs(r) == 1.0) {
    c.t = std::copysign(std::numeric_limits<double>::infinity(), r);
    c.p = 0.0;
  } else {
    c.t = r * std::sqrt(df) / std::sqrt(1.0 - r * r);
    c.p = t_distribution_sf(c.t, df);
  }
  return c;
}

CorrelationReport pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("pearson: samples differ in length");
  if (x.size() < 3) throw StatsError("pearson needs n >= 3");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson: zero variance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return pearson_from_summary(r, x.size());
}

RegressionReport ols_from_correlation(double r, std::size_t n) {
  if (n < 3) throw StatsError("regression needs n >= 3");
  RegressionReport g;
  g.n = n;
  g.beta_std = r;
  g.r2 = r * r;
  const double nn = static_cast<double>(n);
  g.adj_r2 = 1.0 - (1.0 - g.r2) * (nn - 1.0) / (nn - 2.0);
  g.se_std = std::sqrt(std::max(0.0, 1.0 - g.r2) / (nn - 2.0));
  if (g.r2 >= 1.0) {
    g.f = std::numeric_limits<double>::infinity();
    g.t = std::copysign(std::numeric_limits<double>::infinity(), r);
    g.p = 0.0;
  } else {
    g.f = (nn - 2.0) * g.r2 / (1.0 - g.r2);
    g.t = r / g.se_std;
    g.p = f_distribution_sf(g.f, 1.0, nn - 2.0);
  }
  return g;
}

RegressionReport ols_simple(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatsError("ols_simple: samples differ in length");
  if (x.size() < 3) throw StatsError("regression needs n >= 3");
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw StatsError("ols_simple: predictor has zero variance");
  if (syy == 0.0) throw StatsError("ols_simple: response has zero variance");
  const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  RegressionReport g = ols_from_correlation(r, x.size());
  g.slope = sxy / sxx;
  g.intercept = my - g.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - g.intercept - g.slope * x[i];
    sse += e * e;
  }
  const double nn = static_cast<double>(x.size());
  g.se_slope = std::sqrt(sse / (nn - 2.0) / sxx);
  return g;
}

std::string_view to_string(TTestVariant v) { return v == TTestVariant::pooled ? "pooled" : "welch"; }

std::optional<TTestVariant> parse_ttest_variant(std::string_view name) {
  if (name == "pooled") return TTestVariant::pooled;
  if (name == "welch") return TTestVariant::welch;
  return std::nullopt;
}

TTestReport ttest_from_summary(const GroupSummary& a, const GroupSummary& b, TTestVariant variant) {
  if (a.n < 2 || b.n < 2) throw StatsError("t-test needs at least two observations per group");
  if (a.sd < 0.0 || b.sd < 0.0) throw StatsError("negative standard deviation");
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double va = a.sd * a.sd;
  const double vb = b.sd * b.sd;
  TTestReport r;
  r.a = a;
  r.b = b;
  r.variant = variant;
  double se = 0.0;
  if (variant == TTestVariant::pooled) {
    r.df = na + nb - 2.0;
    const double sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    se = std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
  } else {
    const double qa = va / na;
    const double qb = vb / nb;
    se = std::sqrt(qa + qb);
    const double den = qa * qa / (na - 1.0) + qb * qb / (nb - 1.0);
    r.df = den > 0.0 ? (qa + qb) * (qa + qb) / den : na + nb - 2.0;
  }
  if (se == 0.0) throw StatsError("t-test: zero variance in both groups");
  r.t = (a.mean - b.mean) / se;
  r.p = t_distribution_sf(r.t, r.df);
  return r;
}

TTestReport ttest_independent(std::span<const double> a, std::span<const double> b,
                              TTestVariant variant) {
  if (a.size() < 2 || b.size() < 2) throw StatsError("t-test needs at least two observations per group");
  const GroupSummary sa{mean(a), std::sqrt(sample_variance(a)), a.size()};
  const GroupSummary sb{mean(b), std::sqrt(sample_variance(b)), b.size()};
  return ttest_from_summary(sa, sb, variant);
}

}  // namespace pathxai
