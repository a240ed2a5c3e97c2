#include "pathxai/metrics.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pathxai {

namespace {

std::optional<double> ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw std::invalid_argument("confusion: no predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predictions[i] == positive_class;
    const bool true_pos = labels[i] == positive_class;
    if (pred_pos && true_pos) ++cm.tp;
    else if (!pred_pos && !true_pos) ++cm.tn;
    else if (pred_pos) ++cm.fp;
    else ++cm.fn;
  }
  return cm;
}

MetricReport score(const ConfusionMatrix& cm) {
  const auto tp = static_cast<double>(cm.tp);
  const auto tn = static_cast<double>(cm.tn);
  const auto fp = static_cast<double>(cm.fp);
  const auto fn = static_cast<double>(cm.fn);
  MetricReport r;
  r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
  r.sensitivity = ratio(tp, tp + fn);
  r.specificity = ratio(tn, tn + fp);
  r.precision = ratio(tp, tp + fp);
  if (r.precision && r.sensitivity) {
    r.f1 = ratio(2.0 * *r.precision * *r.sensitivity, *r.precision + *r.sensitivity);
  }
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  r.mcc = den == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
  return r;
}

std::string format_metric(const std::optional<double>& v, int decimals) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *v);
  return buf;
}

std::string format_metric_table(std::span<const MetricRow> rows, int decimals) {
  static constexpr std::array<const char*, 8> kHeader{
      "Model",     "Classification Accuracy", "Sensitivity", "Specificity",
      "Precision", "F1 Score",                "MCC",         "Training Time (s)"};
  std::vector<std::array<std::string, 8>> cells;
  for (const auto& row : rows) {
    const auto& m = row.report;
    cells.push_back({row.name, format_metric(m.accuracy, decimals),
                     format_metric(m.sensitivity, decimals), format_metric(m.specificity, decimals),
                     format_metric(m.precision, decimals), format_metric(m.f1, decimals),
                     format_metric(m.mcc, decimals), format_metric(row.training_seconds, 1)});
  }
  std::array<std::size_t, 8> width{};
  for (std::size_t c = 0; c < 8; ++c) {
    width[c] = std::string(kHeader[c]).size();
    for (const auto& r : cells) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto emit = [&](auto&& get) {
    for (std::size_t c = 0; c < 8; ++c) {
      const std::string s = get(c);
      if (c == 0) {
        out << s << std::string(width[c] - s.size(), ' ');
      } else {
        out << "  " << std::string(width[c] - s.size(), ' ') << s;
      }
    }
    out << '\n';
  };
  emit([&](std::size_t c) { return std::string(kHeader[c]); });
  for (const auto& r : cells) emit([&](std::size_t c) { return r[c]; });
  return out.str();
}

}  // namespace pathxai
