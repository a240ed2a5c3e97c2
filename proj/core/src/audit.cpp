#include "pathxai/audit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "pathxai/tdist.hpp"

namespace pathxai {

namespace {

constexpr double kSlack = 1e-9;

std::string fmt(double v, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string_view::npos ? std::string{} : std::string(s.substr(b, e - b + 1));
}

Verdict compare(double derived, const ReportedNumber& reported, double tolerance) {
  switch (reported.relation) {
    case ReportedNumber::Relation::less:
      return derived < reported.value ? Verdict::consistent : Verdict::inconsistent;
    case ReportedNumber::Relation::greater:
      return derived > reported.value ? Verdict::consistent : Verdict::inconsistent;
    case ReportedNumber::Relation::equal:
      break;
  }
  return std::abs(derived - reported.value) <= tolerance + kSlack ? Verdict::consistent
                                                                  : Verdict::inconsistent;
}

class Auditor {
 public:
  Auditor(const KeyValueFile& record, const AuditOptions& options)
      : record_(record), options_(options) {}

  std::vector<Finding> run() {
    n_ = number("n");
    composites();
    correlation();
    regression();
    ttests();
    return std::move(findings_);
  }

 private:
  std::optional<ReportedNumber> number(const std::string& key) {
    const auto v = record_.get(key);
    if (!v) return std::nullopt;
    auto parsed = parse_reported(*v);
    if (!parsed) throw ConfigError("record key '" + key + "' is not a number: '" + *v + "'");
    return parsed;
  }

  std::optional<std::size_t> sample_size() const {
    if (!n_ || n_->value < 1 || n_->value != std::floor(n_->value)) return std::nullopt;
    return static_cast<std::size_t>(n_->value);
  }

  void add(std::string check, std::string basis, std::optional<double> derived,
           const std::optional<ReportedNumber>& reported, double tolerance, std::string note = {}) {
    Finding f;
    f.check = std::move(check);
    f.basis = std::move(basis);
    f.derived = derived;
    f.reported = reported ? reported->text : "-";
    f.tolerance = tolerance;
    f.note = std::move(note);
    f.verdict = (derived && reported) ? compare(*derived, *reported, tolerance) : Verdict::unverifiable;
    findings_.push_back(std::move(f));
  }

  void unverifiable(std::string check, std::string basis, const std::optional<ReportedNumber>& reported,
                    std::string note) {
    add(std::move(check), std::move(basis), std::nullopt, reported, 0.0, std::move(note));
  }

  std::optional<ReportedNumber> r_value() {
    if (auto r = number("correlation.r")) return r;
    return number("regression.r");
  }

  // Composite scale means from their item means.
  void composites() {
    std::set<std::string> scales;
    for (const auto& [k, v] : record_.entries) {
      const auto dot = k.rfind(".items");
      if (dot != std::string::npos && dot + 6 == k.size()) scales.insert(k.substr(0, dot));
    }
    for (const auto& scale : scales) {
      const auto items = parse_reported_list(*record_.get(scale + ".items"));
      const auto reported = number(scale + ".mean");
      if (items.empty()) throw ConfigError("record key '" + scale + ".items' has no values");
      double sum = 0.0;
      int decimals = 0;
      for (const auto& it : items) {
        sum += it.value;
        decimals = std::max(decimals, it.decimals);
      }
      const double envelope = options_.composite_envelope > 0.0
                                  ? options_.composite_envelope
                                  : 0.5 * std::pow(10.0, -decimals);
      add(scale + ".mean", "mean of " + std::to_string(items.size()) + " item means",
          sum / static_cast<double>(items.size()), reported, envelope,
          "envelope from item rounding");
    }
  }

  void correlation() {
    const auto reported_p = number("correlation.p");
    if (!reported_p) return;
    const auto r = r_value();
    const auto n = sample_size();
    if (!r || !n) {
      unverifiable("correlation.p", "t test of r with n - 2 df", reported_p, "needs r and n");
      return;
    }
    const auto c = pearson_from_summary(r->value, *n);
    add("correlation.p", "t = " + fmt(c.t, 3) + " on " + std::to_string(*n - 2) + " df", c.p,
        reported_p, reported_p->half_unit());
  }

  void regression() {
    const auto r = r_value();
    const auto n = sample_size();
    const auto beta = number("regression.beta");
    const auto se = number("regression.se");
    const auto r2 = number("regression.r2");
    const auto adj = number("regression.adj_r2");
    const auto f = number("regression.f");
    const auto p = number("regression.p");

    if (beta) {
      if (r) {
        add("regression.beta", "standardized slope equals r", r->value, beta, beta->half_unit());
      } else {
        unverifiable("regression.beta", "standardized slope equals r", beta, "needs r");
      }
    }
    if (r2) {
      if (r) {
        add("regression.r2", "r^2 from r = " + r->text, r->value * r->value, r2, r2->half_unit());
      } else {
        unverifiable("regression.r2", "r^2", r2, "needs r");
      }
    }
    if (adj) {
      if (r && n) {
        add("regression.adj_r2", "from r and n", ols_from_correlation(r->value, *n).adj_r2, adj,
            adj->half_unit());
      } else if (!n) {
        unverifiable("regression.adj_r2", "1 - (1 - R^2)(n - 1)/(n - 2)", adj, "needs n");
      }
      if (n && !r && !r2) unverifiable("regression.adj_r2", "1 - (1 - R^2)(n - 1)/(n - 2)", adj, "needs r or R^2");
      if (r2 && n) {
        const double nn = static_cast<double>(*n);
        add("regression.adj_r2", "from reported R^2 and n", 1.0 - (1.0 - r2->value) * (nn - 1.0) / (nn - 2.0),
            adj, adj->half_unit());
      }
    }
    if (f) {
      if (r && n) {
        const auto g = ols_from_correlation(r->value, *n);
        add("regression.f", "(n - 2) R^2 / (1 - R^2) from r and n", g.f, f, f->half_unit(),
            "F must equal t^2 of the slope test");
      } else if (!n) {
        unverifiable("regression.f", "(n - 2) R^2 / (1 - R^2)", f, "needs n");
      }
      if (n && !r && !r2) unverifiable("regression.f", "(n - 2) R^2 / (1 - R^2)", f, "needs r or R^2");
      if (r2 && n && r2->value < 1.0) {
        const double nn = static_cast<double>(*n);
        add("regression.f", "(n - 2) R^2 / (1 - R^2) from reported R^2 and n",
            (nn - 2.0) * r2->value / (1.0 - r2->value), f, f->half_unit());
      }
    }
    if (p) {
      if (r && n) {
        add("regression.p", "F test with (1, n - 2) df from r and n",
            ols_from_correlation(r->value, *n).p, p, p->half_unit());
      }
      if (f && n && *n > 2) {
        add("regression.p", "F test of the reported F", f_distribution_sf(f->value, 1.0, static_cast<double>(*n - 2)),
            p, p->half_unit());
      }
      if (!n) unverifiable("regression.p", "F test", p, "needs n");
    }
    if (se) {
      if (r && n) {
        add("regression.se", "standard error of the standardized slope",
            ols_from_correlation(r->value, *n).se_std, se, se->half_unit());
        const auto x = record_.get("regression.x");
        const auto y = record_.get("regression.y");
        const auto sx = x ? number(*x + ".sd") : std::nullopt;
        const auto sy = y ? number(*y + ".sd") : std::nullopt;
        if (sx && sy && sx->value > 0.0) {
          add("regression.se", "standard error of the unstandardized slope (sd ratio " + sy->text +
                                   "/" + sx->text + ")",
              ols_from_correlation(r->value, *n).se_std * sy->value / sx->value, se, se->half_unit());
        }
      } else {
        unverifiable("regression.se", "standard error of the slope", se, "needs r and n");
      }
    }
  }

  struct Split {
    std::size_t n1;
    std::size_t n2;
    TTestReport test;
  };

  void ttests() {
    std::set<std::string> scales;
    const std::string prefix = "ttest.";
    for (const auto& [k, v] : record_.entries) {
      if (k.rfind(prefix, 0) == 0) {
        const auto rest = k.substr(prefix.size());
        const auto dot = rest.find('.');
        if (dot != std::string::npos) scales.insert(rest.substr(0, dot));
      }
    }
    for (const auto& scale : scales) ttest(scale);

    // Every scale is split by the same respondent attribute, so a split pinned
    // down by one scale applies to the others.
    const auto shared = record_.get("ttest.shared_split");
    if (shared && (*shared == "no" || *shared == "false")) return;
    std::set<std::pair<std::size_t, std::size_t>> distinct;
    for (const auto& [scale, sizes] : identified_) distinct.insert(sizes);
    if (distinct.size() != 1) return;
    const auto [n1, n2] = *distinct.begin();
    std::string from;
    for (const auto& [scale, sizes] : identified_) from += (from.empty() ? "" : ", ") + scale;
    std::vector<std::size_t> superseded;
    for (auto& [scale, u] : unresolved_) {
      u.a.n = n1;
      u.b.n = n2;
      const TTestReport r = ttest_from_summary(u.a, u.b, options_.variant);
      const std::string where = std::string(to_string(options_.variant)) + " t at split " + std::to_string(n1) +
                                "/" + std::to_string(n2) + " identified from " + from;
      if (u.t_rep) add("ttest." + scale + ".t", where, r.t, u.t_rep, options_.t_tolerance);
      if (u.p_rep) {
        add("ttest." + scale + ".p", where + " (df " + fmt(r.df, 2) + ")", r.p, u.p_rep, u.p_rep->half_unit());
        superseded.push_back(u.p_finding);
      }
    }
    std::sort(superseded.rbegin(), superseded.rend());
    for (std::size_t i : superseded) findings_.erase(findings_.begin() + static_cast<std::ptrdiff_t>(i));
  }

  static GroupSummary group(const std::vector<ReportedNumber>& v, const std::string& key) {
    if (v.size() != 2) throw ConfigError("record key '" + key + "' must be 'mean, sd'");
    return {v[0].value, v[1].value, 0};
  }

  void ttest(const std::string& scale) {
    const std::string base = "ttest." + scale + ".";
    const auto g1_text = record_.get(base + "group1");
    const auto g2_text = record_.get(base + "group2");
    const auto t_rep = number(base + "t");
    const auto p_rep = number(base + "p");
    if (!g1_text || !g2_text) {
      if (t_rep) unverifiable(base + "t", "independent t test", t_rep, "needs group1 and group2 summaries");
      return;
    }
    const auto g1v = parse_reported_list(*g1_text);
    const auto g2v = parse_reported_list(*g2_text);
    GroupSummary a = group(g1v, base + "group1");
    GroupSummary b = group(g2v, base + "group2");
    const std::string variant(to_string(options_.variant));

    std::vector<Split> candidates;
    const auto n1 = number(base + "n1");
    const auto n2 = number(base + "n2");
    const auto n = sample_size();
    if (n1 && n2) {
      candidates.push_back({static_cast<std::size_t>(n1->value), static_cast<std::size_t>(n2->value), {}});
    } else if (n) {
      for (std::size_t k = 2; k + 2 <= *n; ++k) candidates.push_back({k, *n - k, {}});
    } else {
      if (t_rep) unverifiable(base + "t", variant + " t test", t_rep, "needs n or group sizes");
      if (p_rep) unverifiable(base + "p", variant + " t test", p_rep, "needs n or group sizes");
      return;
    }
    for (auto& c : candidates) {
      a.n = c.n1;
      b.n = c.n2;
      c.test = ttest_from_summary(a, b, options_.variant);
    }
    if (!t_rep) return;

    std::vector<Split> matching;
    for (const auto& c : candidates) {
      if (std::abs(c.test.t - t_rep->value) <= options_.t_tolerance + kSlack) matching.push_back(c);
    }
    const Split* closest = &candidates.front();
    for (const auto& c : candidates) {
      if (std::abs(c.test.t - t_rep->value) < std::abs(closest->test.t - t_rep->value)) closest = &c;
    }

    auto split_list = [](const std::vector<Split>& v) {
      std::string s;
      for (const auto& c : v) {
        s += (s.empty() ? "" : ", ") + std::to_string(c.n1) + "/" + std::to_string(c.n2) + " (t = " +
             fmt(c.test.t, 3) + ")";
      }
      return s.empty() ? std::string("none") : s;
    };

    // Splits that also reproduce the pooled-sample mean and sd of the scale.
    std::vector<Split> joint = matching;
    std::string joint_note;
    const auto grand_mean = number(scale + ".mean");
    const auto grand_sd = number(scale + ".sd");
    if (candidates.size() > 1 && (grand_mean || grand_sd)) {
      const double input_half = 0.5 * std::pow(10.0, -std::max({g1v[0].decimals, g2v[0].decimals,
                                                                  g1v[1].decimals, g2v[1].decimals}));
      std::vector<Split> kept;
      for (const auto& c : joint) {
        const double nn1 = static_cast<double>(c.n1);
        const double nn2 = static_cast<double>(c.n2);
        const double nn = nn1 + nn2;
        const double m = (nn1 * a.mean + nn2 * b.mean) / nn;
        const double ss = (nn1 - 1) * a.sd * a.sd + (nn2 - 1) * b.sd * b.sd +
                          nn1 * (a.mean - m) * (a.mean - m) + nn2 * (b.mean - m) * (b.mean - m);
        const double sd = std::sqrt(ss / (nn - 1.0));
        bool ok = true;
        if (grand_mean) ok = ok && std::abs(m - grand_mean->value) <= grand_mean->half_unit() + input_half + kSlack;
        if (grand_sd) ok = ok && std::abs(sd - grand_sd->value) <= grand_sd->half_unit() + input_half + kSlack;
        joint_note += (joint_note.empty() ? "" : "; ") + std::to_string(c.n1) + "/" +
                      std::to_string(c.n2) + ": pooled mean " + fmt(m, 3) + ", sd " + fmt(sd, 3) +
                      (ok ? " (fits)" : " (rejected)");
        if (ok) kept.push_back(c);
      }
      joint = std::move(kept);
    }

    if (candidates.size() == 1) {
      add(base + "t", variant + " t with n1/n2 = " + std::to_string(candidates[0].n1) + "/" +
                          std::to_string(candidates[0].n2),
          candidates[0].test.t, t_rep, options_.t_tolerance);
    } else {
      Finding f;
      f.check = base + "t";
      f.reported = t_rep->text;
      f.tolerance = options_.t_tolerance;
      f.note = "splits within tolerance: " + split_list(matching);
      if (joint.size() == 1) {
        f.basis = variant + " t at split " + std::to_string(joint[0].n1) + "/" + std::to_string(joint[0].n2) +
                  ", the only one of n = " + std::to_string(*n) + " that fits";
        f.derived = joint[0].test.t;
        f.verdict = compare(joint[0].test.t, *t_rep, options_.t_tolerance);
      } else {
        f.basis = variant + " t over all splits of n = " + std::to_string(*n);
        f.derived = closest->test.t;
        f.verdict = matching.empty() ? Verdict::inconsistent : Verdict::consistent;
        f.note = "closest split " + std::to_string(closest->n1) + "/" + std::to_string(closest->n2) + "; " + f.note;
      }
      findings_.push_back(std::move(f));

      Finding s;
      s.check = base + "split";
      s.basis = "t within tolerance" + std::string(grand_mean || grand_sd ? " and pooled " + scale + " mean/sd reproduced" : "");
      s.reported = "-";
      s.tolerance = options_.t_tolerance;
      if (joint.size() == 1) {
        identified_[scale] = {joint[0].n1, joint[0].n2};
        s.verdict = Verdict::consistent;
        s.derived = joint[0].test.t;
        s.note = "unique split " + std::to_string(joint[0].n1) + "/" + std::to_string(joint[0].n2);
      } else if (joint.empty()) {
        s.verdict = Verdict::inconsistent;
        s.note = "no split reproduces the summaries";
      } else {
        s.verdict = Verdict::unverifiable;
        s.note = "ambiguous: " + split_list(joint);
      }
      if (!joint_note.empty()) s.note += " [" + joint_note + "]";
      findings_.push_back(std::move(s));
    }

    if (p_rep) {
      const Split* chosen = candidates.size() == 1 ? &candidates[0]
                            : joint.size() == 1    ? &joint[0]
                                                   : nullptr;
      if (chosen) {
        add(base + "p", variant + " t test p at split " + std::to_string(chosen->n1) + "/" +
                            std::to_string(chosen->n2) + " (df " + fmt(chosen->test.df, 2) + ")",
            chosen->test.p, p_rep, p_rep->half_unit());
      } else {
        unverifiable(base + "p", variant + " t test p", p_rep, "group sizes not identified");
      }
    }
    if (candidates.size() > 1 && joint.size() != 1) {
      unresolved_[scale] = {a, b, t_rep, p_rep, p_rep ? findings_.size() - 1 : 0};
    }
  }

  struct Unresolved {
    GroupSummary a;
    GroupSummary b;
    std::optional<ReportedNumber> t_rep;
    std::optional<ReportedNumber> p_rep;
    std::size_t p_finding = 0;
  };
  std::map<std::string, std::pair<std::size_t, std::size_t>> identified_;
  std::map<std::string, Unresolved> unresolved_;

  const KeyValueFile& record_;
  AuditOptions options_;
  std::optional<ReportedNumber> n_;
  std::vector<Finding> findings_;
};

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::inconsistent: return "inconsistent";
    case Verdict::unverifiable: return "unverifiable";
  }
  return "unknown";
}

double ReportedNumber::half_unit() const { return 0.5 * std::pow(10.0, -decimals); }

std::optional<ReportedNumber> parse_reported(std::string_view text) {
  std::string s = trim(text);
  ReportedNumber r;
  r.text = s;
  if (s.empty()) return std::nullopt;
  if (s[0] == '<' || s[0] == '>') {
    r.relation = s[0] == '<' ? ReportedNumber::Relation::less : ReportedNumber::Relation::greater;
    s = trim(std::string_view(s).substr(1));
  }
  std::string body = s;
  bool negative = false;
  if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
    negative = body[0] == '-';
    body.erase(0, 1);
  }
  if (!body.empty() && body[0] == '.') body.insert(0, "0");
  const auto dot = body.find('.');
  r.decimals = dot == std::string::npos ? 0 : static_cast<int>(body.size() - dot - 1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
  if (body.empty() || ec != std::errc{} || p != body.data() + body.size()) return std::nullopt;
  r.value = negative ? -v : v;
  return r;
}

std::vector<ReportedNumber> parse_reported_list(std::string_view text) {
  std::vector<ReportedNumber> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    auto v = parse_reported(piece);
    if (!v) throw ConfigError("not a number list: '" + std::string(text) + "'");
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<Finding> audit_reported(const KeyValueFile& record, const AuditOptions& options) {
  return Auditor(record, options).run();
}

std::string format_findings(const std::vector<Finding>& findings) {
  std::ostringstream out;
  std::size_t w = 5;
  for (const auto& f : findings) w = std::max(w, f.check.size());
  out << "check" << std::string(w - 5, ' ') << "  verdict         derived    reported  tolerance  basis\n";
  for (const auto& f : findings) {
    char line[256];
    std::snprintf(line, sizeof line, "%-*s  %-12s  %9s  %10s  %9s  ", static_cast<int>(w), f.check.c_str(),
                  std::string(to_string(f.verdict)).c_str(), f.derived ? fmt(*f.derived).c_str() : "-",
                  f.reported.c_str(), fmt(f.tolerance, 3).c_str());
    out << line << f.basis;
    if (!f.note.empty()) out << " | " << f.note;
    out << '\n';
  }
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& f : findings) ++counts[static_cast<int>(f.verdict)];
  out << "\nsummary: " << counts[0] << " consistent, " << counts[1] << " inconsistent, " << counts[2]
      << " unverifiable\n";
  return out.str();
}

}  // namespace pathxai
