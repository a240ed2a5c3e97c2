#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pathxai/audit.hpp"
#include "pathxai/checkpoint.hpp"
#include "pathxai/checksum.hpp"
#include "pathxai/config.hpp"
#include "pathxai/dataset.hpp"
#include "pathxai/gradcam.hpp"
#include "pathxai/image.hpp"
#include "pathxai/metrics.hpp"
#include "pathxai/models.hpp"
#include "pathxai/rng.hpp"
#include "pathxai/stats.hpp"
#include "pathxai/survey.hpp"
#include "pathxai/trainer.hpp"

#ifndef PATHXAI_VERSION
#define PATHXAI_VERSION "unknown"
#endif

namespace pathxai::cli {

namespace fs = std::filesystem;

namespace {

class CliError : public std::runtime_error {
 public:
  CliError(int code, std::string category, const std::string& msg)
      : std::runtime_error(msg), code_(code), category_(std::move(category)) {}
  [[nodiscard]] int code() const { return code_; }
  [[nodiscard]] const std::string& category() const { return category_; }

 private:
  int code_;
  std::string category_;
};

[[noreturn]] void usage_error(const std::string& msg) { throw CliError(kUsage, "usage", msg); }
[[noreturn]] void data_error(const std::string& msg) { throw CliError(kData, "data", msg); }

void require_path(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw CliError(kMissingInput, "missing-input", what + " '" + p.string() + "' does not exist");
}

std::string fmt(double v, const char* spec = "%.9g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// ---------------------------------------------------------------------------
// Settings: every option has a config key, a flag, a textual default, and a
// record of where its final value came from.

enum class Source { fallback, checkpoint, config, flag };

struct Field {
  std::string key;
  std::string value;
  bool is_flag = false;
  bool switch_value = false;
  bool required = false;
  Source source = Source::fallback;
  CLI::Option* option = nullptr;
};

class Settings {
 public:
  Field& add(CLI::App* app, const std::string& key, const std::string& flag, std::string fallback,
             const std::string& help, bool required = false) {
    Field& f = fields_.emplace_back();
    f.key = key;
    f.value = std::move(fallback);
    f.required = required;
    f.option = app->add_option(flag, f.value, help + "  [" + key + "]");
    if (!required) f.option->capture_default_str();
    return f;
  }

  Field& add_switch(CLI::App* app, const std::string& key, const std::string& flag, const std::string& help) {
    Field& f = fields_.emplace_back();
    f.key = key;
    f.value = "false";
    f.is_flag = true;
    f.option = app->add_flag(flag, f.switch_value, help + "  [" + key + "]");
    return f;
  }

  void after_parse() {
    for (auto& f : fields_) {
      if (f.option->count() == 0) continue;
      f.source = Source::flag;
      if (f.is_flag) f.value = f.switch_value ? "true" : "false";
    }
  }

  /// Fills every field not given on the command line from the config file.
  void merge(const KeyValueFile& file) {
    for (auto& f : fields_) {
      if (f.source == Source::flag) continue;
      if (auto v = file.get(f.key)) {
        f.value = *v;
        f.source = Source::config;
      }
    }
  }

  /// Fills defaulted fields from checkpoint metadata (evaluate, explain).
  void inherit(const std::string& key, const std::map<std::string, std::string>& meta, const std::string& meta_key) {
    Field& f = field(key);
    if (f.source != Source::fallback) return;
    if (auto it = meta.find(meta_key); it != meta.end()) {
      f.value = it->second;
      f.source = Source::checkpoint;
    }
  }

  void check_required() const {
    for (const auto& f : fields_) {
      if (f.required && f.value.empty()) {
        usage_error(f.option->get_name() + " is required (or set " + f.key + " in --config)");
      }
    }
  }

  [[nodiscard]] const std::string& text(const std::string& key) const { return field(key).value; }

  [[nodiscard]] double real(const std::string& key) const {
    const Field& f = field(key);
    double v = 0.0;
    const char* b = f.value.data();
    const auto [ptr, ec] = std::from_chars(b, b + f.value.size(), v);
    if (ec != std::errc{} || ptr != b + f.value.size() || !std::isfinite(v)) bad_value(f, "a number");
    return v;
  }

  [[nodiscard]] std::uint64_t integer(const std::string& key) const {
    const Field& f = field(key);
    std::uint64_t v = 0;
    const char* b = f.value.data();
    const auto [ptr, ec] = std::from_chars(b, b + f.value.size(), v);
    if (ec != std::errc{} || ptr != b + f.value.size()) bad_value(f, "a non-negative integer");
    return v;
  }

  [[nodiscard]] bool boolean(const std::string& key) const {
    const Field& f = field(key);
    if (f.value == "true" || f.value == "1") return true;
    if (f.value == "false" || f.value == "0") return false;
    bad_value(f, "true or false");
  }

  [[noreturn]] void bad_value(const std::string& key, const std::string& expected) const {
    bad_value(field(key), expected);
  }

  [[nodiscard]] const std::deque<Field>& fields() const { return fields_; }

 private:
  Field& field(const std::string& key) {
    for (auto& f : fields_) {
      if (f.key == key) return f;
    }
    throw std::logic_error("unknown setting " + key);
  }
  [[nodiscard]] const Field& field(const std::string& key) const {
    return const_cast<Settings*>(this)->field(key);
  }

  [[noreturn]] static void bad_value(const Field& f, const std::string& expected) {
    const std::string msg = f.key + " = '" + f.value + "' is not " + expected;
    if (f.source == Source::config) throw CliError(kConfig, "config", msg);
    if (f.source == Source::checkpoint) data_error(msg + " (from checkpoint metadata)");
    usage_error(msg);
  }

  std::deque<Field> fields_;  // deque: CLI11 keeps references into the elements
};

// Sections that appear in run manifests but are not settings.
const std::set<std::string> kManifestSections = {"streams", "versions", "outputs"};

// ---------------------------------------------------------------------------
// Output bookkeeping and the run manifest.

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw CliError(kInternal, "internal", "cannot create '" + root_.string() + "': " + ec.message());
  }

  [[nodiscard]] const fs::path& root() const { return root_; }

  fs::path write_text(const std::string& name, const std::string& content) {
    const fs::path p = root_ / name;
    std::ofstream f(p, std::ios::binary);
    f << content;
    if (!f) throw CliError(kInternal, "internal", "cannot write '" + p.string() + "'");
    record(p);
    return p;
  }

  void record(const fs::path& p) { written_.push_back(p); }

  /// Stream-free files (e.g. wall-clock timings) are listed without a checksum.
  void record_volatile(const fs::path& p) { volatile_.push_back(p); }

  void write_manifest(const std::string& subcommand, const Settings& settings,
                      const std::vector<std::pair<std::string, std::uint64_t>>& streams) {
    KeyValueFile m;
    m.set("run.subcommand", subcommand);
    for (const auto& f : settings.fields()) m.set(f.key, f.value);
    for (const auto& [name, seed] : streams) m.set("streams." + name, std::to_string(seed));
    m.set("versions.pathxai", PATHXAI_VERSION);
    m.set("versions.checkpoint_format", "1");
    m.set("versions.compiler", std::string("gcc-compatible ") + __VERSION__);
    for (const auto& p : written_) {
      m.set("outputs." + fs::relative(p, root_).generic_string(), sha256_file(p));
    }
    for (const auto& p : volatile_) {
      m.set("outputs." + fs::relative(p, root_).generic_string(), "volatile");
    }
    std::ofstream f(root_ / "run.txt", std::ios::binary);
    f << "# pathxai run manifest; rerun with: pathxai " << subcommand << " --config run.txt\n";
    f << format_key_values(m);
    if (!f) throw CliError(kInternal, "internal", "cannot write run.txt");
  }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
  std::vector<fs::path> volatile_;
};

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<std::size_t> parse_size_list(const Settings& s, const std::string& key) {
  std::vector<std::size_t> out;
  const std::string& text = s.text(key);
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size() || v == 0) {
      s.bad_value(key, "a comma list of positive integers");
    }
    out.push_back(v);
  }
  return out;
}

std::set<std::string> parse_name_list(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (!item.empty()) out.insert(item);
  }
  return out;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

double fraction_setting(const Settings& s, const std::string& key) {
  const double f = s.real(key);
  if (!(f > 0.0 && f < 1.0)) s.bad_value(key, "strictly between 0 and 1");
  return f;
}

Checkpoint load_model(const fs::path& p) {
  require_path(p, "checkpoint");
  return load_checkpoint(p);
}

void check_input_shape(const Network& net, const LabeledSet& set) {
  for (const auto& item : set.items) {
    Shape4 s = item.image.shape();
    s.n = 1;
    if (!(s == net.input_shape())) {
      data_error("image '" + item.name + "' has shape " + to_string(s) + " but the model expects " +
                 to_string(net.input_shape()));
    }
  }
}

std::string class_name(int label) { return label == kDiseased ? "diseased" : "healthy"; }

// ---------------------------------------------------------------------------
// Subcommands

struct Context {
  Settings settings;
  std::ostream* out = nullptr;
};

int cmd_generate(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t n = s.integer("data.n");
  if (n < 2 || n % 2 != 0) s.bad_value("data.n", "an even count of at least 2");
  const std::uint64_t size = s.integer("data.size");
  if (size < 8) s.bad_value("data.size", "at least 8");
  const auto streams = SeedStreams::from(s.integer("run.seed"));

  GeneratorParams params;
  params.size = size;
  OutputDir out(s.text("run.out"));
  const LabeledSet set = generate(n, streams.data, params);
  for (const auto& p : save_dir(set, out.root())) out.record(p);
  out.write_manifest("generate", s, {{"data", streams.data}});
  *ctx.out << "generated " << set.count(kHealthy) << " healthy and " << set.count(kDiseased)
           << " diseased images in " << out.root().string() << '\n';
  return kOk;
}

int cmd_train(Context& ctx) {
  const Settings& s = ctx.settings;
  const std::uint64_t seed = s.integer("run.seed");
  const auto streams = SeedStreams::from(seed);
  const double fraction = fraction_setting(s, "data.train_fraction");
  const auto family = parse_family(s.text("model.family"));
  if (!family) s.bad_value("model.family", "one of plain-cnn, mini-resnet, mini-vgg");

  TrainConfig tc;
  tc.learning_rate = s.real("train.lr");
  if (tc.learning_rate < 0.0) s.bad_value("train.lr", "non-negative");
  tc.epochs = s.integer("train.epochs");
  tc.batch_size = s.integer("train.batch");
  if (tc.batch_size == 0) s.bad_value("train.batch", "positive");
  tc.seed = streams.shuffle;

  const fs::path data_dir = s.text("data.dir");
  require_path(data_dir, "data directory");
  std::vector<std::string> warnings;
  const LabeledSet all = load_dir(data_dir, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  auto [train_set, test_set] = split(all, fraction, streams.split);
  if (train_set.items.empty()) data_error("training split is empty");

  ArchitectureSpec spec;
  spec.family = *family;
  spec.widths = parse_size_list(s, "model.widths");
  spec.hidden = s.integer("model.hidden");
  const Shape4 shape = train_set.items.front().image.shape();
  spec.channels = shape.c;
  spec.height = shape.h;
  spec.width = shape.w;
  spec.seed = streams.init;
  Network net = [&] {
    try {
      return build(spec);
    } catch (const ShapeError& e) {
      data_error(e.what());
    }
  }();
  check_input_shape(net, train_set);

  OutputDir out(s.text("run.out"));
  std::ostringstream history;
  history << "epoch train_loss train_accuracy\n";
  std::ostringstream timing;
  timing << "epoch seconds\n";
  const TrainHistory h = train(net, train_set, tc, nullptr, [&](const EpochRecord& r) {
    history << r.epoch << ' ' << fmt(r.train_loss, "%.6f") << ' ' << fmt(r.train_accuracy, "%.6f") << '\n';
    timing << r.epoch << ' ' << fmt(r.seconds, "%.3f") << '\n';
    *ctx.out << "epoch " << r.epoch << '/' << tc.epochs << "  loss " << fmt(r.train_loss, "%.4f") << "  acc "
             << fmt(r.train_accuracy, "%.4f") << '\n';
  });
  timing << "total " << fmt(h.total_seconds(), "%.3f") << '\n';

  Checkpoint ckpt{std::move(net), {}};
  ckpt.metadata = {
      {"family", std::string(to_string(*family))},
      {"widths", join_sizes(spec.resolved_widths())},
      {"hidden", std::to_string(spec.hidden)},
      {"seed", std::to_string(seed)},
      {"train_fraction", s.text("data.train_fraction")},
      {"epochs", std::to_string(tc.epochs)},
      {"lr", s.text("train.lr")},
      {"batch", std::to_string(tc.batch_size)},
      {"train_items", std::to_string(train_set.size())},
  };
  const fs::path ckpt_path = out.root() / "model.ckpt";
  save_checkpoint(ckpt_path, ckpt);
  out.record(ckpt_path);
  out.write_text("history.txt", history.str());
  {
    const fs::path tp = out.root() / "timing.txt";
    std::ofstream(tp) << timing.str();
    out.record_volatile(tp);
  }
  out.write_manifest("train", s,
                     {{"split", streams.split}, {"init", streams.init}, {"shuffle", streams.shuffle}});
  return kOk;
}

std::optional<double> read_training_seconds(const fs::path& ckpt_path) {
  std::ifstream in(ckpt_path.parent_path() / "timing.txt");
  std::string word;
  double value = 0.0;
  while (in >> word) {
    if (word == "total" && in >> value) return value;
  }
  return std::nullopt;
}

int cmd_evaluate(Context& ctx) {
  Settings& s = ctx.settings;
  const fs::path ckpt_path = s.text("model.checkpoint");
  const Checkpoint ckpt = load_model(ckpt_path);
  s.inherit("run.seed", ckpt.metadata, "seed");
  s.inherit("data.train_fraction", ckpt.metadata, "train_fraction");

  const std::string which = s.text("data.split");
  if (which != "test" && which != "train" && which != "all") s.bad_value("data.split", "test, train or all");
  const auto streams = SeedStreams::from(s.integer("run.seed"));
  const double fraction = fraction_setting(s, "data.train_fraction");

  const fs::path data_dir = s.text("data.dir");
  require_path(data_dir, "data directory");
  std::vector<std::string> warnings;
  LabeledSet all = load_dir(data_dir, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  LabeledSet eval_set;
  if (which == "all") {
    eval_set = std::move(all);
  } else {
    auto parts = split(all, fraction, streams.split);
    eval_set = which == "test" ? std::move(parts.second) : std::move(parts.first);
  }
  if (eval_set.items.empty()) data_error("the " + which + " split is empty");
  check_input_shape(ckpt.network, eval_set);

  std::vector<int> preds;
  std::vector<int> labels;
  std::ostringstream per_item;
  per_item << "name,label,predicted,p_healthy,p_diseased\n";
  for (const auto& item : eval_set.items) {
    const Classification c = classify(ckpt.network, item.image);
    preds.push_back(c.label);
    labels.push_back(item.label);
    per_item << item.name << ',' << item.label << ',' << c.label << ',' << fmt(c.probabilities[0], "%.6f")
             << ',' << fmt(c.probabilities[1], "%.6f") << '\n';
  }
  const ConfusionMatrix cm = confusion(preds, labels, kDiseased);

  MetricRow row;
  row.name = s.text("eval.name");
  if (row.name.empty()) {
    const auto it = ckpt.metadata.find("family");
    row.name = it == ckpt.metadata.end() ? "model" : it->second;
  }
  row.report = score(cm);
  if (s.boolean("eval.report_time")) row.training_seconds = read_training_seconds(ckpt_path);

  OutputDir out(s.text("run.out"));
  const std::string table = format_metric_table(std::span<const MetricRow>(&row, 1));
  out.write_text("metrics.txt", table);
  std::ostringstream cmtext;
  cmtext << "split = " << which << "\nitems = " << cm.total() << "\ntp = " << cm.tp << "\ntn = " << cm.tn
         << "\nfp = " << cm.fp << "\nfn = " << cm.fn << '\n';
  out.write_text("confusion.txt", cmtext.str());
  out.write_text("predictions.csv", per_item.str());
  out.write_manifest("evaluate", s, {{"split", streams.split}});
  *ctx.out << table;
  return kOk;
}

struct ExplainInput {
  std::string stem;
  fs::path image;
  std::optional<int> label;
  std::optional<fs::path> mask;
};

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Accepts either the generate layout (healthy/, diseased/, masks/) or a flat
// directory of PNGs; both may be present.
std::vector<ExplainInput> collect_explain_inputs(const fs::path& dir) {
  std::vector<ExplainInput> inputs;
  for (const auto& p : sorted_pngs(dir)) inputs.push_back({p.stem().string(), p, std::nullopt, std::nullopt});
  for (int label : {kHealthy, kDiseased}) {
    for (const auto& p : sorted_pngs(dir / class_name(label))) {
      ExplainInput in{p.stem().string(), p, label, std::nullopt};
      const fs::path m = dir / "masks" / p.filename();
      if (label == kDiseased && fs::exists(m)) in.mask = m;
      inputs.push_back(std::move(in));
    }
  }
  std::set<std::string> stems;
  for (const auto& in : inputs) {
    if (!stems.insert(in.stem).second) data_error("duplicate image name '" + in.stem + "' in " + dir.string());
  }
  if (inputs.empty()) data_error("no PNG images found in '" + dir.string() + "'");
  return inputs;
}

int cmd_explain(Context& ctx) {
  const Settings& s = ctx.settings;
  const Checkpoint ckpt = load_model(s.text("model.checkpoint"));
  const Network& net = ckpt.network;

  const double alpha = s.real("explain.alpha");
  if (alpha < 0.0 || alpha > 1.0) s.bad_value("explain.alpha", "in [0, 1]");

  std::optional<std::size_t> layer;
  if (s.text("explain.layer") != "last") {
    layer = s.integer("explain.layer");
    const auto convs = net.conv_layers();
    if (std::find(convs.begin(), convs.end(), *layer) == convs.end()) {
      s.bad_value("explain.layer", "'last' or a conv layer index (" + join_sizes(convs) + ")");
    }
  }
  std::optional<int> fixed_target;
  const std::string& target = s.text("explain.target");
  if (target == "healthy" || target == "0") {
    fixed_target = kHealthy;
  } else if (target == "diseased" || target == "1") {
    fixed_target = kDiseased;
  } else if (target != "predicted") {
    s.bad_value("explain.target", "predicted, healthy or diseased");
  }

  const fs::path data_dir = s.text("data.dir");
  require_path(data_dir, "image directory");
  const auto inputs = collect_explain_inputs(data_dir);

  OutputDir out(s.text("run.out"));
  std::ostringstream summary;
  summary << "name,label,predicted,p_diseased,target,layer,constant,localization,mask_fraction\n";
  double loc_sum = 0.0;
  std::size_t loc_count = 0;
  std::size_t degenerate = 0;
  for (const auto& in : inputs) {
    RgbImage rgb;
    std::optional<GrayImage> mask_img;
    try {
      rgb = read_png_rgb(in.image);
      if (in.mask) mask_img = read_png_gray(*in.mask);
    } catch (const ImageError& e) {
      data_error(e.what());
    }
    const Tensor4 image = to_tensor(rgb);
    if (!(image.shape() == net.input_shape())) {
      data_error("image '" + in.image.string() + "' has shape " + to_string(image.shape()) +
                 " but the model expects " + to_string(net.input_shape()));
    }
    const Classification c = classify(net, image);
    const int cls = fixed_target.value_or(c.label);
    const Heatmap hm = gradcam_compute(net, c.cache, cls, layer);
    if (hm.constant) ++degenerate;

    const std::string base = in.stem + ".gradcam." + class_name(cls);
    const fs::path png = out.root() / (base + ".png");
    write_png(png, overlay(hm, rgb, alpha));
    out.record(png);

    KeyValueFile side;
    side.set("image", in.image.filename().string());
    side.set("label", in.label ? class_name(*in.label) : "unknown");
    side.set("predicted", class_name(c.label));
    side.set("p_healthy", fmt(c.probabilities[0], "%.17g"));
    side.set("p_diseased", fmt(c.probabilities[1], "%.17g"));
    side.set("target", class_name(cls));
    side.set("layer", std::to_string(hm.source_layer));
    side.set("map_height", std::to_string(hm.height));
    side.set("map_width", std::to_string(hm.width));
    side.set("constant", hm.constant ? "true" : "false");
    side.set("alpha", fmt(alpha, "%.17g"));
    for (std::size_t k = 0; k < hm.channel_weights.size(); ++k) {
      char key[32];
      std::snprintf(key, sizeof key, "weights.%03zu", k);
      side.set(key, fmt(hm.channel_weights[k], "%.17g"));
    }
    std::string loc_text = "n/a";
    std::string area_text = "n/a";
    if (mask_img) {
      if (mask_img->width != hm.upsampled_width || mask_img->height != hm.upsampled_height) {
        data_error("mask for '" + in.stem + "' does not match the image size");
      }
      std::vector<std::uint8_t> mask(mask_img->pixels.size());
      std::transform(mask_img->pixels.begin(), mask_img->pixels.end(), mask.begin(),
                     [](std::uint8_t v) { return static_cast<std::uint8_t>(v >= 128); });
      const LocalizationScore ls = localization_score(hm, mask);
      loc_text = fmt(ls.fraction, "%.6f");
      area_text = fmt(mask_fraction(mask), "%.6f");
      if (cls == kDiseased) {
        loc_sum += ls.fraction;
        ++loc_count;
      }
    }
    side.set("localization", loc_text);
    side.set("mask_fraction", area_text);
    out.write_text(base + ".txt", format_key_values(side));

    summary << in.stem << ',' << (in.label ? std::to_string(*in.label) : "") << ',' << c.label << ','
            << fmt(c.probabilities[1], "%.6f") << ',' << cls << ',' << hm.source_layer << ','
            << (hm.constant ? 1 : 0) << ',' << loc_text << ',' << area_text << '\n';
  }
  out.write_text("explain.csv", summary.str());

  std::ostringstream report;
  report << "images = " << inputs.size() << "\noverlays = " << inputs.size() << "\nconstant_heatmaps = "
         << degenerate << "\nmean_localization_diseased = "
         << (loc_count ? fmt(loc_sum / static_cast<double>(loc_count), "%.6f") : "n/a")
         << "\nscored_images = " << loc_count << '\n';
  out.write_text("explain.txt", report.str());
  out.write_manifest("explain", s, {});
  *ctx.out << report.str();
  return kOk;
}

TTestVariant variant_setting(const Settings& s, const std::string& key) {
  const auto v = parse_ttest_variant(s.text(key));
  if (!v) s.bad_value(key, "pooled or welch");
  return *v;
}

int cmd_stats(Context& ctx) {
  const Settings& s = ctx.settings;
  SurveyOptions opts;
  opts.variant = variant_setting(s, "stats.variant");
  opts.senior_years = s.real("stats.senior_years");
  opts.reversed = parse_name_list(s.text("stats.reverse"));
  const double lo = s.real("stats.scale_min");
  const double hi = s.real("stats.scale_max");
  if (!(lo < hi)) s.bad_value("stats.scale_max", "greater than stats.scale_min");

  const fs::path csv = s.text("stats.survey");
  require_path(csv, "survey file");
  const SurveyMatrix survey = read_survey_csv(csv, lo, hi);
  for (const auto& r : opts.reversed) {
    if (std::find(survey.items.begin(), survey.items.end(), r) == survey.items.end()) {
      s.bad_value("stats.reverse", "a list of item ids present in the survey ('" + r + "' is not)");
    }
  }
  const SurveyAnalysis a = analyze_survey(survey, opts);
  OutputDir out(s.text("run.out"));
  const std::string report = format_survey_report(a);
  out.write_text("stats.txt", report);
  out.write_manifest("stats", s, {});
  *ctx.out << report;
  return kOk;
}

int cmd_audit(Context& ctx) {
  const Settings& s = ctx.settings;
  AuditOptions opts;
  opts.variant = variant_setting(s, "audit.variant");
  opts.t_tolerance = s.real("audit.t_tolerance");
  opts.composite_envelope = s.real("audit.composite_envelope");
  if (opts.t_tolerance < 0.0) s.bad_value("audit.t_tolerance", "non-negative");
  if (opts.composite_envelope < 0.0) s.bad_value("audit.composite_envelope", "non-negative");

  const fs::path record_path = s.text("audit.record");
  require_path(record_path, "record file");
  const KeyValueFile record = load_key_values(record_path);
  const auto findings = audit_reported(record, opts);
  OutputDir out(s.text("run.out"));
  const std::string report = format_findings(findings);
  out.write_text("audit.txt", report);
  out.write_manifest("audit", s, {});
  *ctx.out << report;
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Histopathology classification, Grad-CAM explanations and survey statistics."};
  app.name("pathxai");
  app.require_subcommand(1);
  app.set_version_flag("--version", PATHXAI_VERSION);

  struct Command {
    CLI::App* app;
    Context ctx;
    int (*fn)(Context&);
    std::string config;
  };
  std::deque<Command> commands;
  auto add_command = [&](const char* name, const char* help, int (*fn)(Context&)) -> Command& {
    Command& c = commands.emplace_back();
    c.app = app.add_subcommand(name, help);
    c.fn = fn;
    c.ctx.out = &out;
    c.app->add_option("--config", c.config, "key = value settings file; flags take precedence");
    c.ctx.settings.add(c.app, "run.out", "--out", "", "output directory", true);
    return c;
  };
  auto seed = [](Command& c) {
    c.ctx.settings.add(c.app, "run.seed", "--seed", "7", "master seed (data, split, init, shuffle streams)");
  };

  {
    Command& c = add_command("generate", "synthesize a labeled two-class image set", cmd_generate);
    Settings& s = c.ctx.settings;
    seed(c);
    s.add(c.app, "data.n", "--n", "520", "number of images (even; half per class)");
    s.add(c.app, "data.size", "--size", "64", "image side length in pixels");
  }
  {
    Command& c = add_command("train", "train a classifier on the train split", cmd_train);
    Settings& s = c.ctx.settings;
    seed(c);
    s.add(c.app, "data.dir", "--data", "", "dataset directory", true);
    s.add(c.app, "data.train_fraction", "--train-fraction", "0.8", "stratified train share");
    s.add(c.app, "model.family", "--family", "mini-vgg", "plain-cnn, mini-resnet or mini-vgg");
    s.add(c.app, "model.widths", "--widths", "", "conv widths per stage, comma separated (empty: family default)");
    s.add(c.app, "model.hidden", "--hidden", "32", "hidden dense width for mini-vgg (0 disables)");
    s.add(c.app, "train.lr", "--lr", "0.01", "SGD learning rate");
    s.add(c.app, "train.epochs", "--epochs", "30", "training epochs");
    s.add(c.app, "train.batch", "--batch", "16", "minibatch size");
  }
  {
    Command& c = add_command("evaluate", "score a checkpoint on a dataset split", cmd_evaluate);
    Settings& s = c.ctx.settings;
    seed(c);
    s.add(c.app, "data.dir", "--data", "", "dataset directory", true);
    s.add(c.app, "data.train_fraction", "--train-fraction", "0.8", "stratified train share");
    s.add(c.app, "data.split", "--split", "test", "test, train or all");
    s.add(c.app, "model.checkpoint", "--checkpoint", "", "model checkpoint", true);
    s.add(c.app, "eval.name", "--name", "", "row label (default: model family)");
    s.add_switch(c.app, "eval.report_time", "--report-time", "fill Training Time from the run's timing.txt");
  }
  {
    Command& c = add_command("explain", "write Grad-CAM overlays for every image in a directory", cmd_explain);
    Settings& s = c.ctx.settings;
    s.add(c.app, "data.dir", "--data", "", "image directory (flat, or healthy/ diseased/ masks/)", true);
    s.add(c.app, "model.checkpoint", "--checkpoint", "", "model checkpoint", true);
    s.add(c.app, "explain.alpha", "--alpha", "0.4", "heatmap opacity");
    s.add(c.app, "explain.layer", "--layer", "last", "conv layer index, or 'last'");
    s.add(c.app, "explain.target", "--target", "predicted", "predicted, healthy or diseased");
  }
  {
    Command& c = add_command("stats", "reliability, correlation, regression and group tests on a survey", cmd_stats);
    Settings& s = c.ctx.settings;
    s.add(c.app, "stats.survey", "--survey", "", "survey CSV", true);
    s.add(c.app, "stats.variant", "--variant", "pooled", "t-test variant: pooled or welch");
    s.add(c.app, "stats.senior_years", "--senior-years", "5", "experience threshold of the senior group");
    s.add(c.app, "stats.reverse", "--reverse", "", "reverse-scored item ids, comma separated");
    s.add(c.app, "stats.scale_min", "--scale-min", "1", "lowest Likert score");
    s.add(c.app, "stats.scale_max", "--scale-max", "7", "highest Likert score");
  }
  {
    Command& c = add_command("audit", "check reported summary statistics for internal consistency", cmd_audit);
    Settings& s = c.ctx.settings;
    s.add(c.app, "audit.record", "--record", "", "record of reported values (key = value)", true);
    s.add(c.app, "audit.variant", "--variant", "pooled", "t-test variant: pooled or welch");
    s.add(c.app, "audit.t_tolerance", "--t-tolerance", "0.05", "allowed |t difference|");
    s.add(c.app, "audit.composite_envelope", "--composite-envelope", "0", "composite mean envelope (0: auto)");
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return app.exit(e, out, err);
      err << "error: usage: " << one_line(e.what()) << '\n';
      return kUsage;
    }
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      Settings& s = c.ctx.settings;
      s.after_parse();
      if (!c.config.empty()) {
        require_path(c.config, "config file");
        const KeyValueFile file = load_key_values(c.config);
        std::set<std::string> known;
        for (const auto& cc : commands) {
          for (const auto& f : cc.ctx.settings.fields()) known.insert(f.key);
        }
        known.insert("run.subcommand");
        for (const auto& [k, v] : file.entries) {
          const auto dot = k.find('.');
          if (dot != std::string::npos && kManifestSections.contains(k.substr(0, dot))) continue;
          if (!known.contains(k)) throw ConfigError(c.config + ": unknown setting '" + k + "'");
        }
        s.merge(file);
      }
      s.check_required();
      return c.fn(c.ctx);
    }
    err << "error: usage: no subcommand\n";
    return kUsage;
  } catch (const CliError& e) {
    err << "error: " << e.category() << ": " << one_line(e.what()) << '\n';
    return e.code();
  } catch (const ConfigError& e) {
    err << "error: config: " << one_line(e.what()) << '\n';
    return kConfig;
  } catch (const TrainingDiverged& e) {
    err << "error: diverged: " << one_line(e.what()) << '\n';
    return kDiverged;
  } catch (const DatasetError& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kData;
  } catch (const ImageError& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kData;
  } catch (const CheckpointError& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kData;
  } catch (const SurveyError& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kData;
  } catch (const StatsError& e) {
    err << "error: data: " << one_line(e.what()) << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return kInternal;
  }
}

}  // namespace pathxai::cli
