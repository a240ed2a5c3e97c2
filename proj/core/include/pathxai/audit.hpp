#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathxai/config.hpp"
#include "pathxai/stats.hpp"

namespace pathxai {

enum class Verdict { consistent, inconsistent, unverifiable };
std::string_view to_string(Verdict v);

/// A number as printed in a report: value, decimals shown, and whether it was
/// an inequality such as "<.05".
struct ReportedNumber {
  enum class Relation { equal, less, greater };
  double value = 0.0;
  int decimals = 0;
  Relation relation = Relation::equal;
  std::string text;

  /// Half a unit in the last printed place.
  [[nodiscard]] double half_unit() const;
};

std::optional<ReportedNumber> parse_reported(std::string_view text);
std::vector<ReportedNumber> parse_reported_list(std::string_view text);

struct Finding {
  std::string check;               // e.g. "regression.f"
  std::string basis;               // what the derived value was computed from
  std::optional<double> derived;
  std::string reported;            // verbatim
  Verdict verdict = Verdict::unverifiable;
  double tolerance = 0.0;
  std::string note;
};

struct AuditOptions {
  /// Allowed |derived t - reported t| when recomputing from rounded summaries.
  double t_tolerance = 0.05;
  /// Envelope for composite means from rounded item means; 0 = half a unit of
  /// the item precision.
  double composite_envelope = 0.0;
  TTestVariant variant = TTestVariant::pooled;
};

/// Recomputes every quantity derivable from the record and compares it with
/// the reported value. Reported values are never modified.
///
/// Recognized keys (sections shown as prefixes):
///   n
///   <scale>.items, <scale>.mean, <scale>.sd
///   correlation.r, correlation.p
///   regression.x, regression.y (scale names), regression.beta, regression.se,
///   regression.r2, regression.adj_r2, regression.f, regression.p
///   ttest.<scale>.group1 / group2 ("mean, sd"), ttest.<scale>.n1 / n2,
///   ttest.<scale>.t, ttest.<scale>.p
std::vector<Finding> audit_reported(const KeyValueFile& record, const AuditOptions& options = {});

std::string format_findings(const std::vector<Finding>& findings);

}  // namespace pathxai
