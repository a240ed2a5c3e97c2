// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "pathxai/audit.hpp"
#include "pathxai/checkpoint.hpp"
#include "pathxai/checksum.hpp"
#include "pathxai/config.hpp"
#include "pathxai/dataset.hpp"
#include "pathxai/gradcam.hpp"
#include "pathxai/metrics.hpp"
#include "pathxai/stats.hpp"
#include "pathxai/tdist.hpp"
#include "pathxai/trainer.hpp"
#include "testing.hpp"

namespace fs = std::filesystem;
using namespace pathxai;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pathxai");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "pathxai %s -> %d: %s", args[1].c_str(), code, err.str().c_str());
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// --- 1 ---------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(1000 + seed);
    Network net = testing::three_conv_network(seed);
    Tensor4 x = testing::random_tensor({2, 2, 8, 8}, rng);
    const auto c = testing::random_vector(4, rng);
    const ForwardCache cache = net.forward(x, Mode::train);
    Gradients grads = net.zero_gradients();
    const Tensor4 gx = net.backward(cache, Tensor4(cache.logits().shape(), c), &grads);
    auto f = [&] { return testing::dot(net.forward(x, Mode::train).logits().values(), c); };

    // Coordinates drawn uniformly from the input and every parameter block.
    auto blocks = net.parameter_blocks();
    std::size_t total = x.size();
    for (const auto& b : blocks) total += b.size();
    for (int k = 0; k < 100; ++k) {
      std::size_t idx = rng.below(total);
      double analytic = 0.0, numeric = 0.0;
      if (idx < x.size()) {
        analytic = gx[idx];
        numeric = testing::central_difference(f, x[idx]);
      } else {
        idx -= x.size();
        std::size_t b = 0;
        while (idx >= blocks[b].size()) idx -= blocks[b++].size();
        analytic = grads.blocks[b][idx];
        numeric = testing::central_difference(f, blocks[b][idx]);
      }
      worst = std::max(worst, testing::relative_error(analytic, numeric));
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 60.0 && checked == 1000,
          std::to_string(checked) + " coordinates, worst relative error " + fmt("%.2e", worst) + ", " +
              fmt("%.2f", secs) + " s"};
}

// --- 2 ---------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  std::size_t compared = 0, mismatches = 0;
  for (std::uint64_t total = 1; total <= 40; ++total)
    for (std::uint64_t tp = 0; tp <= total; ++tp)
      for (std::uint64_t tn = 0; tn + tp <= total; ++tn)
        for (std::uint64_t fp = 0; fp + tn + tp <= total; ++fp) {
          const std::uint64_t fn = total - tp - tn - fp;
          const auto v = oracle::realize(tp, tn, fp, fn);
          const MetricReport r = score(confusion(v.predictions, v.labels));
          const auto rho = oracle::pearson(v.predictions, v.labels);
          if (rho ? std::abs(r.mcc - *rho) > 1e-12 : r.mcc != 0.0) ++mismatches;

          const double pos = static_cast<double>(tp + fn), neg = static_cast<double>(tn + fp);
          const double called = static_cast<double>(tp + fp);
          double correct = 0.0;
          for (std::size_t i = 0; i < v.labels.size(); ++i) correct += v.predictions[i] == v.labels[i];
          auto same = [](const std::optional<double>& got, bool defined, double want) {
            return defined ? got.has_value() && *got == want : !got.has_value();
          };
          bool ok = *r.accuracy == correct / static_cast<double>(total);
          ok = ok && same(r.sensitivity, pos > 0, static_cast<double>(tp) / pos);
          ok = ok && same(r.specificity, neg > 0, static_cast<double>(tn) / neg);
          ok = ok && same(r.precision, called > 0, static_cast<double>(tp) / called);
          if (r.f1 && r.precision && r.sensitivity) {
            const double p = *r.precision, s = *r.sensitivity;
            ok = ok && *r.f1 == 2.0 * p * s / (p + s);
          }
          mismatches += ok ? 0 : 1;
          ++compared;
        }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0, std::to_string(compared) + " matrices, " + std::to_string(mismatches) +
                                              " mismatches, " + fmt("%.2f", secs) + " s"};
}

// --- 3, 4 ------------------------------------------------------------------

struct FamilyRun {
  std::string family;
  MetricReport report;
  double seconds = 0.0;
  bool ok = false;
};

struct Shared {
  fs::path root;
  std::vector<FamilyRun> runs;
};

MetricReport read_confusion(const fs::path& p) {
  const KeyValueFile f = load_key_values(p);
  auto n = [&](const char* k) { return static_cast<std::uint64_t>(std::stoull(*f.get(k))); };
  return score(ConfusionMatrix{n("tp"), n("tn"), n("fp"), n("fn")});
}

Outcome classification(Shared& shared) {
  const fs::path data = shared.root / "data";
  if (cli({"generate", "--seed", "7", "--n", "520", "--out", data.string()}) != 0) return {false, "generate failed"};
  for (const char* family : {"plain-cnn", "mini-resnet", "mini-vgg"}) {
    FamilyRun run{family, {}, 0.0, false};
    const fs::path t = shared.root / family;
    const auto t0 = Clock::now();
    run.ok = cli({"train", "--data", data.string(), "--family", family, "--seed", "7", "--train-fraction", "0.8",
                  "--out", (t / "train").string()}) == 0;
    run.seconds = seconds_since(t0);
    run.ok = run.ok && cli({"evaluate", "--data", data.string(), "--checkpoint", (t / "train" / "model.ckpt").string(),
                            "--report-time", "--out", (t / "eval").string()}) == 0;
    if (run.ok) run.report = read_confusion(t / "eval" / "confusion.txt");
    shared.runs.push_back(run);
  }
  std::string detail;
  bool ok = true;
  for (const auto& r : shared.runs) {
    if (!r.ok) return {false, r.family + " run failed"};
    detail += r.family + " acc " + fmt("%.4f", *r.report.accuracy) + " mcc " + fmt("%.4f", r.report.mcc) + " in " +
              fmt("%.0f", r.seconds) + " s; ";
  }
  const FamilyRun& vgg = shared.runs[2];
  ok = *vgg.report.accuracy >= 0.90 && vgg.report.mcc >= 0.80 && vgg.seconds <= 600.0;
  const bool ordered = shared.runs[0].report.mcc <= shared.runs[1].report.mcc &&
                       shared.runs[1].report.mcc <= shared.runs[2].report.mcc;
  detail += ordered ? "MCC ordering plain <= resnet <= vgg holds" : "MCC ordering plain <= resnet <= vgg VIOLATED";
  return {ok, detail};
}

Outcome localization(const Shared& shared) {
  const fs::path ckpt = shared.root / "mini-vgg" / "train" / "model.ckpt";
  if (!fs::exists(ckpt)) return {false, "no mini-vgg checkpoint"};
  const Checkpoint model = load_checkpoint(ckpt);
  const LabeledSet all = load_dir(shared.root / "data");
  const auto test = split(all, 0.8, SeedStreams::from(7).split).second;

  Rng rng(derive_seed(7, "control"));
  double loc = 0.0, area = 0.0, control = 0.0;
  std::size_t diseased = 0, degenerate = 0;
  for (const auto& item : test.items) {
    const Heatmap hm = gradcam_compute(model.network, item.image, kDiseased);
    const LocalizationScore s = item.mask ? localization_score(hm, *item.mask) : LocalizationScore{};
    if (hm.constant || s.degenerate) ++degenerate;
    if (!item.mask) continue;
    ++diseased;
    loc += s.fraction;
    area += mask_fraction(*item.mask);
    std::vector<double> shuffled = hm.upsampled;
    shuffle(shuffled, rng);
    control += localization_score(shuffled, *item.mask).fraction;
  }
  if (diseased == 0) return {false, "no diseased test images"};
  const double d = static_cast<double>(diseased);
  loc /= d;
  area /= d;
  control /= d;
  const double degenerate_share = static_cast<double>(degenerate) / static_cast<double>(test.size());
  const bool ok = loc >= 2.0 * area && loc >= 2.0 * control && degenerate_share < 0.05;
  return {ok, "mean localization " + fmt("%.4f", loc) + " vs mask area " + fmt("%.4f", area) +
                  " and shuffled control " + fmt("%.4f", control) + ", degenerate " +
                  fmt("%.1f", 100.0 * degenerate_share) + "% of " + std::to_string(test.size())};
}

// --- 5 ---------------------------------------------------------------------

Outcome gradcam_algebra() {
  const Tensor4 a({1, 2, 2, 2}, {1, 0, 0, 0, 0, 0, 0, 1});
  const Tensor4 g({1, 2, 2, 2}, {2, 0, 1, 1, 0.5, -0.5, 1, -1});
  const Heatmap hm = gradcam_from_maps(a, g);
  const std::vector<double> expect = {1, 0, 0, 0};
  double worst_example = 0.0;
  for (std::size_t i = 0; i < 4; ++i) worst_example = std::max(worst_example, std::abs(hm.values[i] - expect[i]));

  Rng rng(505);
  double worst_scaled = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 1 + rng.below(6), h = 1 + rng.below(7), w = 1 + rng.below(7);
    const Tensor4 maps = testing::random_tensor({1, k, h, w}, rng, 0.0, 2.0);
    Tensor4 grads = testing::random_tensor({1, k, h, w}, rng);
    const Heatmap base = gradcam_from_maps(maps, grads);
    const double c = std::exp(rng.uniform(-5.0, 5.0));
    for (auto& v : grads.values()) v *= c;
    const Heatmap scaled = gradcam_from_maps(maps, grads);
    for (std::size_t i = 0; i < base.values.size(); ++i) {
      worst_scaled = std::max(worst_scaled, std::abs(base.values[i] - scaled.values[i]));
    }
  }
  return {worst_example <= 1e-12 && worst_scaled <= 1e-12,
          "2x2 example error " + fmt("%.1e", worst_example) + ", scaling invariance error " + fmt("%.1e", worst_scaled) +
              " over 100 cases"};
}

// --- 6 ---------------------------------------------------------------------

Outcome stats_identities() {
  Rng rng(606);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 3 + rng.below(48);
    std::vector<double> x, y;
    const double slope = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(rng.uniform(-5, 5));
      y.push_back(slope * x.back() + rng.normal());
    }
    const auto reg = ols_simple(x, y);
    const auto cor = pearson(x, y);
    const double nn = static_cast<double>(n);
    worst = std::max(worst, std::abs(reg.beta_std - cor.r));
    worst = std::max(worst, std::abs(reg.f - reg.t * reg.t) / std::max(1.0, reg.f));
    worst = std::max(worst, std::abs(reg.adj_r2 - (1.0 - (1.0 - reg.r2) * (nn - 1.0) / (nn - 2.0))));
  }
  double worst_sf = 0.0;
  for (double df : {1.0, 2.0, 5.0, 8.0, 30.0}) {
    for (double t = -10.0; t <= 10.0; t += 0.125) {
      worst_sf = std::max(worst_sf, std::abs(t_distribution_sf(t, df) - oracle::t_two_sided_quadrature(t, df)));
    }
  }
  return {worst <= 1e-10 && worst_sf <= 1e-10,
          "identity error " + fmt("%.1e", worst) + " over 1000 datasets, t tail vs quadrature " + fmt("%.1e", worst_sf)};
}

// --- 7 ---------------------------------------------------------------------

Outcome audit_record() {
  const auto t0 = Clock::now();
  const auto findings = audit_reported(load_key_values(PATHXAI_RECORD_FILE));
  const double secs = seconds_since(t0);
  auto find = [&](const std::string& check, const std::string& basis = "") -> const Finding* {
    for (const auto& f : findings) {
      if (f.check == check && f.basis.find(basis) != std::string::npos) return &f;
    }
    return nullptr;
  };
  std::vector<std::string> missed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) missed.push_back(what);
  };
  const Finding* r2 = find("regression.r2");
  const Finding* adj = find("regression.adj_r2", "from r and n");
  const Finding* f = find("regression.f", "from r and n");
  const Finding* t = find("ttest.chf.t");
  const Finding* split = find("ttest.chf.split");
  const Finding* mean = find("chf.mean");
  expect(r2 && r2->verdict == Verdict::consistent, "R2 consistent");
  expect(adj && adj->verdict == Verdict::consistent, "adjusted R2 consistent");
  expect(f && f->verdict == Verdict::inconsistent && f->derived && std::abs(*f->derived - 10.2) < 0.05,
         "F inconsistent near 10.2");
  expect(t && t->verdict == Verdict::consistent && t->basis.find("6/4") != std::string::npos, "t at 6/4");
  expect(split && split->note.find("unique split 6/4") != std::string::npos && split->derived &&
             std::abs(*split->derived + 3.31) <= 0.05,
         "unique 6/4 split");
  expect(mean && mean->verdict == Verdict::consistent, "composite mean consistent");
  expect(secs < 5.0, "runtime");
  std::string detail = "R2 " + (r2 && r2->derived ? fmt("%.4f", *r2->derived) : "?") + ", adj " +
                       (adj && adj->derived ? fmt("%.4f", *adj->derived) : "?") + ", F derived " +
                       (f && f->derived ? fmt("%.2f", *f->derived) : "?") + ", t at 6/4 " +
                       (split && split->derived ? fmt("%.3f", *split->derived) : "?") + ", CHF mean " +
                       (mean && mean->derived ? fmt("%.3f", *mean->derived) : "?") + ", " + fmt("%.3f", secs) + " s";
  for (const auto& m : missed) detail += "; missing: " + m;
  return {missed.empty(), detail};
}

// --- 8 ---------------------------------------------------------------------

std::map<std::string, std::string> png_checksums(const fs::path& dir) {
  std::map<std::string, std::string> sums;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") {
      sums[fs::relative(e.path(), dir).string()] = sha256_file(e.path());
    }
  }
  return sums;
}

Outcome determinism(const Shared& shared) {
  std::vector<std::string> tables;
  std::vector<std::map<std::string, std::string>> pngs;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path r = shared.root / ("determinism" + std::to_string(rep));
    const bool ok =
        cli({"generate", "--seed", "11", "--n", "40", "--size", "32", "--out", (r / "data").string()}) == 0 &&
        cli({"train", "--data", (r / "data").string(), "--seed", "11", "--epochs", "3", "--out",
             (r / "train").string()}) == 0 &&
        cli({"evaluate", "--data", (r / "data").string(), "--checkpoint", (r / "train" / "model.ckpt").string(),
             "--out", (r / "eval").string()}) == 0 &&
        cli({"explain", "--data", (r / "data").string(), "--checkpoint", (r / "train" / "model.ckpt").string(),
             "--out", (r / "explain").string()}) == 0;
    if (!ok) return {false, "pipeline run " + std::to_string(rep + 1) + " failed"};
    tables.push_back(slurp(r / "eval" / "metrics.txt"));
    auto sums = png_checksums(r / "data");
    for (auto& [k, v] : png_checksums(r / "explain")) sums["explain/" + k] = v;
    pngs.push_back(std::move(sums));
  }
  const bool same_tables = !tables[0].empty() && tables[0] == tables[1];
  const bool same_pngs = !pngs[0].empty() && pngs[0] == pngs[1];
  return {same_tables && same_pngs, std::string("metric tables ") + (same_tables ? "identical" : "differ") + ", " +
                                        std::to_string(pngs[0].size()) + " PNG checksums " +
                                        (same_pngs ? "identical" : "differ")};
}

}  // namespace

int main() {
  Shared shared;
  shared.root = fs::temp_directory_path() / "pathxai_acceptance";
  fs::remove_all(shared.root);
  fs::create_directories(shared.root);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient check", gradient_check},
      {"metric oracles", metric_oracles},
      {"classification", [&] { return classification(shared); }},
      {"grad-cam localization", [&] { return localization(shared); }},
      {"grad-cam algebra", gradcam_algebra},
      {"statistics identities", stats_identities},
      {"survey audit", audit_record},
      {"determinism", [&] { return determinism(shared); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu %-22s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(shared.root);
  return failed == 0 ? 0 : 1;
}
