#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pathxai {

class StatsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Respondents x items, row-major.
struct ItemMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  [[nodiscard]] std::vector<double> column(std::size_t c) const;
  [[nodiscard]] std::vector<double> row_sums() const;
  [[nodiscard]] std::vector<double> row_means() const;
};

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator).
double sample_variance(std::span<const double> x);

/// k/(k-1) * (1 - sum of item variances / variance of the row sums).
double cronbach_alpha(const ItemMatrix& items);

struct Descriptives {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;                  // sample sd
  std::optional<double> skewness;   // adjusted Fisher-Pearson G1, n >= 3
  std::optional<double> kurtosis;   // excess kurtosis G2, n >= 4
};

/// Throws StatsError("zero variance") for constant input and for n < 2.
Descriptives descriptives(std::span<const double> x);

struct CorrelationReport {
  std::size_t n = 0;
  double r = 0.0;
  double t = 0.0;
  double p = 1.0;  // two-sided, n - 2 df
};

CorrelationReport pearson(std::span<const double> x, std::span<const double> y);
/// p value of a correlation from its summary (r, n).
CorrelationReport pearson_from_summary(double r, std::size_t n);

struct RegressionReport {
  std::size_t n = 0;
  double beta_std = 0.0;   // standardized slope (= r)
  double se_std = 0.0;     // its standard error
  double slope = 0.0;      // unstandardized
  double intercept = 0.0;
  double se_slope = 0.0;
  double t = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double f = 0.0;
  double p = 1.0;          // of F with (1, n - 2) df
};

/// Simple least squares of y on x.
RegressionReport ols_simple(std::span<const double> x, std::span<const double> y);
/// The standardized quantities that follow from (r, n) alone.
RegressionReport ols_from_correlation(double r, std::size_t n);

enum class TTestVariant { pooled, welch };
std::string_view to_string(TTestVariant v);
std::optional<TTestVariant> parse_ttest_variant(std::string_view name);

struct GroupSummary {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

struct TTestReport {
  GroupSummary a;
  GroupSummary b;
  TTestVariant variant = TTestVariant::pooled;
  double t = 0.0;   // (mean_a - mean_b) / se
  double df = 0.0;
  double p = 1.0;   // two-sided
};

TTestReport ttest_independent(std::span<const double> a, std::span<const double> b,
                              TTestVariant variant = TTestVariant::pooled);
TTestReport ttest_from_summary(const GroupSummary& a, const GroupSummary& b,
                               TTestVariant variant = TTestVariant::pooled);

}  // namespace pathxai
