#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pathxai {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  [[nodiscard]] std::uint64_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Binary-classification scores. A metric whose denominator is zero is left
/// empty and printed as "n/a"; MCC is always defined (0 when any marginal is
/// zero).
struct MetricReport {
  std::optional<double> accuracy;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::optional<double> precision;
  std::optional<double> f1;
  double mcc = 0.0;
};

/// Counts predictions against labels. Throws std::invalid_argument for unequal
/// or empty inputs.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class = 1);

/// accuracy = (tp + tn) / total, sensitivity = tp / (tp + fn),
/// specificity = tn / (tn + fp), precision = tp / (tp + fp),
/// f1 = 2 * precision * sensitivity / (precision + sensitivity),
/// mcc = (tp * tn - fp * fn) / sqrt((tp + fp)(tp + fn)(tn + fp)(tn + fn)).
///
/// The MCC numerator is the product difference tp*tn - fp*fn; only that form
/// equals the Pearson correlation of predictions and labels and spans [-1, 1].
MetricReport score(const ConfusionMatrix& cm);

/// "0.9808" style, or "n/a".
std::string format_metric(const std::optional<double>& v, int decimals = 4);

struct MetricRow {
  std::string name;
  MetricReport report;
  std::optional<double> training_seconds;
};

/// Aligned plain-text table with the columns Classification Accuracy,
/// Sensitivity, Specificity, Precision, F1 Score, MCC, Training Time (s).
std::string format_metric_table(std::span<const MetricRow> rows, int decimals = 4);

}  // namespace pathxai
