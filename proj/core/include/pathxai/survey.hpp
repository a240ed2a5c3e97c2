#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pathxai/stats.hpp"

namespace pathxai {

class SurveyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Likert responses plus per-respondent covariates.
struct SurveyMatrix {
  std::vector<std::string> respondents;
  std::vector<std::string> items;  // CHF1..CHF4, XAI1..XAI15
  ItemMatrix scores;               // respondents x items
  std::vector<double> age;
  std::vector<double> experience_years;
  std::vector<bool> ai_experience;
  std::vector<bool> prediction_correct;
  double scale_min = 1.0;
  double scale_max = 7.0;

  /// Columns whose id starts with `prefix` followed by a digit, in file order.
  [[nodiscard]] ItemMatrix scale(const std::string& prefix,
                                 const std::set<std::string>& reversed = {}) const;
};

/// The exact header the survey loader accepts.
std::string survey_csv_header();

/// Parses the survey CSV. Every cell must be present and every score inside
/// [scale_min, scale_max]; violations throw SurveyError with the line number.
SurveyMatrix read_survey_csv(std::istream& in, double scale_min = 1.0, double scale_max = 7.0);
SurveyMatrix read_survey_csv(const std::filesystem::path& path, double scale_min = 1.0,
                             double scale_max = 7.0);
void write_survey_csv(std::ostream& out, const SurveyMatrix& survey);

struct SurveyOptions {
  TTestVariant variant = TTestVariant::pooled;
  /// Respondents with at least this many years form the senior group.
  double senior_years = 5.0;
  /// Items scored as scale_min + scale_max - x before aggregation.
  std::set<std::string> reversed;
};

struct ScaleSummary {
  std::string name;
  std::size_t items = 0;
  double alpha = 0.0;
  Descriptives descriptives;
  std::vector<double> composite;  // per-respondent item mean
};

struct SurveyAnalysis {
  ScaleSummary chf;
  ScaleSummary xai;
  CorrelationReport correlation;     // CHF composite vs XAI composite
  RegressionReport regression;       // XAI composite on CHF composite
  TTestReport chf_by_experience;     // junior (a) vs senior (b)
  TTestReport xai_by_experience;
  SurveyOptions options;
};

/// Reliability, descriptives, correlation, regression and experience-group
/// t-tests over the CHF and XAI composites.
SurveyAnalysis analyze_survey(const SurveyMatrix& survey, const SurveyOptions& options = {});

/// Plain-text tables: reliability and correlation, regression summary, and
/// difference tests.
std::string format_survey_report(const SurveyAnalysis& analysis);

}  // namespace pathxai
