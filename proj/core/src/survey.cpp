#include "pathxai/survey.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pathxai {

namespace {

constexpr const char* kCovariates[] = {"respondent", "age", "experience_years", "ai_experience",
                                       "prediction_correct"};

std::vector<std::string> expected_columns() {
  std::vector<std::string> cols(std::begin(kCovariates), std::end(kCovariates));
  for (int i = 1; i <= 4; ++i) cols.push_back("CHF" + std::to_string(i));
  for (int i = 1; i <= 15; ++i) cols.push_back("XAI" + std::to_string(i));
  return cols;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc{} || p != last || !std::isfinite(v)) {
    throw SurveyError("line " + std::to_string(line) + ": column '" + column +
                      "' needs a number, found '" + cell + "'");
  }
  return v;
}

bool parse_flag(const std::string& cell, std::size_t line, const std::string& column) {
  if (cell == "1" || cell == "yes" || cell == "true") return true;
  if (cell == "0" || cell == "no" || cell == "false") return false;
  throw SurveyError("line " + std::to_string(line) + ": column '" + column +
                    "' needs 0/1, found '" + cell + "'");
}

std::string fmt(double v, int decimals = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string survey_csv_header() {
  std::string h;
  for (const auto& c : expected_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

ItemMatrix SurveyMatrix::scale(const std::string& prefix, const std::set<std::string>& reversed) const {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < items.size(); ++c) {
    const auto& id = items[c];
    if (id.size() > prefix.size() && id.compare(0, prefix.size(), prefix) == 0 &&
        std::isdigit(static_cast<unsigned char>(id[prefix.size()]))) {
      cols.push_back(c);
    }
  }
  if (cols.empty()) throw SurveyError("no items for scale '" + prefix + "'");
  ItemMatrix m;
  m.rows = scores.rows;
  m.cols = cols.size();
  m.values.reserve(m.rows * m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c : cols) {
      double v = scores.at(r, c);
      if (reversed.contains(items[c])) v = scale_min + scale_max - v;
      m.values.push_back(v);
    }
  }
  return m;
}

SurveyMatrix read_survey_csv(std::istream& in, double scale_min, double scale_max) {
  const auto expected = expected_columns();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw SurveyError("survey file is empty");
  const auto header = split_csv(trim(line));
  if (header != expected) throw SurveyError("unexpected header; expected: " + survey_csv_header());

  SurveyMatrix s;
  s.scale_min = scale_min;
  s.scale_max = scale_max;
  s.items.assign(expected.begin() + 5, expected.end());
  s.scores.cols = s.items.size();
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(trim(line));
    if (cells.size() != expected.size()) {
      throw SurveyError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(expected.size()) + " cells, found " +
                        std::to_string(cells.size()) + " (missing cells are not allowed)");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        throw SurveyError("line " + std::to_string(line_no) + ": missing value in column '" +
                          expected[c] + "'");
      }
    }
    s.respondents.push_back(cells[0]);
    s.age.push_back(parse_number(cells[1], line_no, expected[1]));
    s.experience_years.push_back(parse_number(cells[2], line_no, expected[2]));
    s.ai_experience.push_back(parse_flag(cells[3], line_no, expected[3]));
    s.prediction_correct.push_back(parse_flag(cells[4], line_no, expected[4]));
    for (std::size_t c = 5; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], line_no, expected[c]);
      if (v < scale_min || v > scale_max) {
        throw SurveyError("line " + std::to_string(line_no) + ": " + expected[c] + " = " + cells[c] +
                          " outside the scale [" + fmt(scale_min, 0) + ", " + fmt(scale_max, 0) + "]");
      }
      s.scores.values.push_back(v);
    }
    ++s.scores.rows;
  }
  if (s.scores.rows == 0) throw SurveyError("survey has no respondents");
  return s;
}

SurveyMatrix read_survey_csv(const std::filesystem::path& path, double scale_min, double scale_max) {
  std::ifstream in(path);
  if (!in) throw SurveyError("cannot open survey file '" + path.string() + "'");
  return read_survey_csv(in, scale_min, scale_max);
}

void write_survey_csv(std::ostream& out, const SurveyMatrix& s) {
  out << survey_csv_header() << '\n';
  for (std::size_t r = 0; r < s.scores.rows; ++r) {
    out << s.respondents[r] << ',' << s.age[r] << ',' << s.experience_years[r] << ','
        << (s.ai_experience[r] ? 1 : 0) << ',' << (s.prediction_correct[r] ? 1 : 0);
    for (std::size_t c = 0; c < s.scores.cols; ++c) out << ',' << s.scores.at(r, c);
    out << '\n';
  }
}

SurveyAnalysis analyze_survey(const SurveyMatrix& survey, const SurveyOptions& options) {
  SurveyAnalysis a;
  a.options = options;
  auto summarize = [&](const std::string& prefix) {
    ScaleSummary s;
    s.name = prefix;
    const ItemMatrix m = survey.scale(prefix, options.reversed);
    s.items = m.cols;
    s.alpha = cronbach_alpha(m);
    s.composite = m.row_means();
    s.descriptives = descriptives(s.composite);
    return s;
  };
  a.chf = summarize("CHF");
  a.xai = summarize("XAI");
  a.correlation = pearson(a.chf.composite, a.xai.composite);
  a.regression = ols_simple(a.chf.composite, a.xai.composite);

  auto by_experience = [&](const std::vector<double>& values) {
    std::vector<double> junior, senior;
    for (std::size_t r = 0; r < values.size(); ++r) {
      (survey.experience_years[r] >= options.senior_years ? senior : junior).push_back(values[r]);
    }
    return ttest_independent(junior, senior, options.variant);
  };
  a.chf_by_experience = by_experience(a.chf.composite);
  a.xai_by_experience = by_experience(a.xai.composite);
  return a;
}

std::string format_survey_report(const SurveyAnalysis& a) {
  std::ostringstream out;
  const auto star = [](double p) { return p < 0.05 ? "*" : " "; };
  const auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); };

  out << "Reliability and correlation\n";
  out << "  Scale  Items    Mean    S.D.  Alpha       r  Skewness  Kurtosis\n";
  out << "  CHF  " << pad(std::to_string(a.chf.items), 6) << pad(fmt(a.chf.descriptives.mean), 8)
      << pad(fmt(a.chf.descriptives.sd), 8) << pad(fmt(a.chf.alpha), 7) << pad("", 8)
      << pad(opt(a.chf.descriptives.skewness), 10) << pad(opt(a.chf.descriptives.kurtosis), 10) << '\n';
  out << "  XAI  " << pad(std::to_string(a.xai.items), 6) << pad(fmt(a.xai.descriptives.mean), 8)
      << pad(fmt(a.xai.descriptives.sd), 8) << pad(fmt(a.xai.alpha), 7)
      << pad(fmt(a.correlation.r) + star(a.correlation.p), 8)
      << pad(opt(a.xai.descriptives.skewness), 10) << pad(opt(a.xai.descriptives.kurtosis), 10) << '\n';
  out << "  r: CHF vs XAI composite, two-sided p = " << fmt(a.correlation.p, 4) << " (n = "
      << a.correlation.n << "); *: p < .05\n\n";

  const auto& g = a.regression;
  out << "Regression of XAI on CHF (n = " << g.n << ")\n";
  out << "  beta(std) = " << fmt(g.beta_std) << "  S.E.(std) = " << fmt(g.se_std)
      << "  b = " << fmt(g.slope) << "  S.E.(b) = " << fmt(g.se_slope) << "  t = " << fmt(g.t) << '\n';
  out << "  R^2 = " << fmt(g.r2) << "  Adj.R^2 = " << fmt(g.adj_r2) << "  F(1, " << g.n - 2
      << ") = " << fmt(g.f) << "  p = " << fmt(g.p, 4) << "\n\n";

  out << "Difference tests by experience (<" << fmt(a.options.senior_years, 0) << " vs >="
      << fmt(a.options.senior_years, 0) << " years, " << to_string(a.options.variant) << ")\n";
  out << "  Scale   n1  Mean1   S.D.1   n2  Mean2   S.D.2        t      df       p\n";
  for (const auto* t : {&a.chf_by_experience, &a.xai_by_experience}) {
    out << "  " << (t == &a.chf_by_experience ? "CHF  " : "XAI  ") << pad(std::to_string(t->a.n), 5)
        << pad(fmt(t->a.mean, 2), 7) << pad(fmt(t->a.sd, 2), 8) << pad(std::to_string(t->b.n), 5)
        << pad(fmt(t->b.mean, 2), 7) << pad(fmt(t->b.sd, 2), 8) << pad(fmt(t->t), 9)
        << pad(fmt(t->df, 2), 8) << pad(fmt(t->p, 4), 8) << '\n';
  }
  return out.str();
}

}  // namespace pathxai
