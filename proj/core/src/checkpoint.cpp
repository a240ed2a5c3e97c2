#include "pathxai/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace pathxai {

namespace {

constexpr const char* kMagic = "pathxai-checkpoint";
constexpr int kVersion = 1;

void write_values(std::ostream& out, const char* name, std::span<const double> values) {
  out << "  " << name << ' ' << values.size();
  char buf[64];
  for (double v : values) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
    if (ec != std::errc{}) throw CheckpointError("cannot format parameter value");
    out << ' ' << std::string_view(buf, static_cast<std::size_t>(end - buf));
  }
  out << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw CheckpointError("unexpected end of checkpoint");
    return w;
  }

  void expect(const std::string& token) {
    const std::string w = word();
    if (w != token) throw CheckpointError("expected '" + token + "', found '" + w + "'");
  }

  std::size_t count() {
    const std::string w = word();
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || p != w.data() + w.size()) {
      throw CheckpointError("expected a non-negative integer, found '" + w + "'");
    }
    return v;
  }

  double real() {
    std::string w = word();
    bool negative = false;
    std::string_view body = w;
    if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(body.data(), body.data() + body.size(), v, std::chars_format::hex);
    if (ec != std::errc{} || p != body.data() + body.size()) {
      throw CheckpointError("malformed parameter value '" + w + "'");
    }
    return negative ? -v : v;
  }

  std::vector<double> values(const std::string& name, std::size_t expected) {
    expect(name);
    const std::size_t n = count();
    if (n != expected) {
      throw CheckpointError(name + ": expected " + std::to_string(expected) + " values, found " +
                            std::to_string(n));
    }
    std::vector<double> v(n);
    for (auto& x : v) x = real();
    return v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const Network& net = ckpt.network;
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find_first_of(" \t\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw CheckpointError("metadata key/value contains whitespace: '" + k + "'");
    }
    out << "meta " << k << ' ' << (v.empty() ? "-" : v) << '\n';
  }
  const Shape4& in = net.input_shape();
  out << "input " << in.c << ' ' << in.h << ' ' << in.w << '\n';
  out << "layers " << net.size() << '\n';
  for (const Layer& layer : net.layers()) {
    out << to_string(kind_of(layer));
    if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
      const auto& p = c->params;
      out << ' ' << p.out_channels() << ' ' << p.in_channels() << ' ' << p.kernel_h() << ' '
          << p.kernel_w() << ' ' << p.stride << ' ' << p.padding << '\n';
      write_values(out, "weight", p.weight.values());
      write_values(out, "bias", p.bias);
    } else if (const auto* m = std::get_if<MaxPoolLayer>(&layer)) {
      out << ' ' << m->size << ' ' << m->stride << '\n';
    } else if (const auto* b = std::get_if<BatchNormLayer>(&layer)) {
      const auto& p = b->params;
      out << ' ' << p.channels() << ' ' << (p.has_running_stats ? 1 : 0) << '\n';
      write_values(out, "hyper", std::vector<double>{p.momentum, p.epsilon});
      write_values(out, "gamma", p.gamma);
      write_values(out, "beta", p.beta);
      write_values(out, "running_mean", p.running_mean);
      write_values(out, "running_var", p.running_var);
    } else if (const auto* d = std::get_if<DenseLayer>(&layer)) {
      const auto& p = d->params;
      out << ' ' << p.in << ' ' << p.out << '\n';
      write_values(out, "weight", p.weight);
      write_values(out, "bias", p.bias);
    } else {
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw CheckpointError("write failure");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  r.expect(kMagic);
  const std::size_t version = r.count();
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  std::string w = r.word();
  while (w == "meta") {
    std::string key = r.word();
    std::string value;
    std::getline(in >> std::ws, value);
    ckpt.metadata[key] = value == "-" ? "" : value;
    w = r.word();
  }
  if (w != "input") throw CheckpointError("expected 'input', found '" + w + "'");
  Shape4 input{1, r.count(), r.count(), r.count()};
  r.expect("layers");
  const std::size_t n = r.count();
  std::vector<Layer> layers;
  layers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string name = r.word();
    const auto kind = parse_layer_kind(name);
    if (!kind) throw CheckpointError("unknown layer kind '" + name + "'");
    switch (*kind) {
      case LayerKind::conv2d: {
        const std::size_t oc = r.count(), ic = r.count(), kh = r.count(), kw = r.count();
        Conv2dParams p;
        p.stride = r.count();
        p.padding = r.count();
        const Shape4 ks{oc, ic, kh, kw};
        p.weight = Tensor4(ks, r.values("weight", ks.size()));
        p.bias = r.values("bias", oc);
        layers.emplace_back(Conv2dLayer{std::move(p)});
        break;
      }
      case LayerKind::maxpool2d: {
        MaxPoolLayer m;
        m.size = r.count();
        m.stride = r.count();
        layers.emplace_back(m);
        break;
      }
      case LayerKind::batchnorm: {
        const std::size_t c = r.count();
        BatchNormParams p;
        p.has_running_stats = r.count() != 0;
        const auto hyper = r.values("hyper", 2);
        p.momentum = hyper[0];
        p.epsilon = hyper[1];
        p.gamma = r.values("gamma", c);
        p.beta = r.values("beta", c);
        p.running_mean = r.values("running_mean", c);
        p.running_var = r.values("running_var", c);
        layers.emplace_back(BatchNormLayer{std::move(p)});
        break;
      }
      case LayerKind::dense: {
        DenseParams p;
        p.in = r.count();
        p.out = r.count();
        p.weight = r.values("weight", p.in * p.out);
        p.bias = r.values("bias", p.out);
        layers.emplace_back(DenseLayer{std::move(p)});
        break;
      }
      case LayerKind::relu: layers.emplace_back(ReluLayer{}); break;
      case LayerKind::flatten: layers.emplace_back(FlattenLayer{}); break;
      case LayerKind::softmax: layers.emplace_back(SoftmaxLayer{}); break;
      case LayerKind::residual_begin: layers.emplace_back(ResidualBeginLayer{}); break;
      case LayerKind::residual_add: layers.emplace_back(ResidualAddLayer{}); break;
    }
  }
  r.expect("end");
  try {
    ckpt.network = Network(std::move(layers), input);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("invalid network in checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace pathxai
