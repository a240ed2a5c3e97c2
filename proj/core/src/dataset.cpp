#include "pathxai/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "pathxai/image.hpp"
#include "pathxai/rng.hpp"

namespace pathxai {

namespace fs = std::filesystem;

std::size_t LabeledSet::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [&](const auto& it) { return it.label == label; }));
}

void LabeledSet::require_both_classes(const std::string& what) const {
  if (count(kHealthy) == 0 || count(kDiseased) == 0) {
    throw DatasetError(what + " must contain both healthy and diseased items (have " +
                       std::to_string(count(kHealthy)) + " healthy, " +
                       std::to_string(count(kDiseased)) + " diseased)");
  }
}

double mask_fraction(const std::vector<std::uint8_t>& mask) {
  if (mask.empty()) return 0.0;
  const auto set = std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; });
  return static_cast<double>(set) / static_cast<double>(mask.size());
}

Tensor4 batch_images(const LabeledSet& set, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("batch_images: no indices");
  const Shape4 one = set.items.at(indices.front()).image.shape();
  Tensor4 batch({indices.size(), one.c, one.h, one.w});
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Tensor4& img = set.items.at(indices[k]).image;
    if (img.shape() != one) throw ShapeError("batch_images: items differ in shape");
    std::copy(img.values().begin(), img.values().end(), batch.item(k).begin());
  }
  return batch;
}

// ------------------------------------------------------------ generation

namespace {

using Color = std::array<double, 3>;

constexpr Color kBackground{0.95, 0.78, 0.86};  // pale pink
constexpr Color kTissue{0.86, 0.50, 0.68};      // eosin pink
constexpr Color kNucleus{0.36, 0.20, 0.52};     // haematoxylin purple
constexpr Color kBlob{0.42, 0.24, 0.50};        // granuloma surrogate

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Multi-octave value noise in [0, 1].
std::vector<double> value_noise(std::size_t size, Rng& rng) {
  std::vector<double> field(size * size, 0.0);
  constexpr std::array<std::pair<std::size_t, double>, 3> kOctaves{{{16, 0.5}, {8, 0.3}, {4, 0.2}}};
  for (const auto& [cell, amp] : kOctaves) {
    const std::size_t cells = size / cell + 2;
    std::vector<double> lattice(cells * cells);
    for (double& v : lattice) v = rng.uniform();
    for (std::size_t y = 0; y < size; ++y) {
      const double fy = static_cast<double>(y) / static_cast<double>(cell);
      const auto y0 = static_cast<std::size_t>(fy);
      const double ty = smoothstep(fy - static_cast<double>(y0));
      for (std::size_t x = 0; x < size; ++x) {
        const double fx = static_cast<double>(x) / static_cast<double>(cell);
        const auto x0 = static_cast<std::size_t>(fx);
        const double tx = smoothstep(fx - static_cast<double>(x0));
        const double a = lattice[y0 * cells + x0];
        const double b = lattice[y0 * cells + x0 + 1];
        const double c = lattice[(y0 + 1) * cells + x0];
        const double d = lattice[(y0 + 1) * cells + x0 + 1];
        field[y * size + x] += amp * ((1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d));
      }
    }
  }
  return field;
}

struct Ellipse {
  double cx, cy, rx, ry, angle;

  [[nodiscard]] bool contains(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
};

void paint(std::vector<Color>& rgb, std::size_t size, const Ellipse& e, const Color& color,
           double opacity, std::vector<std::uint8_t>* mask, Rng& rng) {
  const double r = std::max(e.rx, e.ry) + 1.0;
  const auto lo_y = static_cast<std::ptrdiff_t>(std::floor(e.cy - r));
  const auto hi_y = static_cast<std::ptrdiff_t>(std::ceil(e.cy + r));
  const auto lo_x = static_cast<std::ptrdiff_t>(std::floor(e.cx - r));
  const auto hi_x = static_cast<std::ptrdiff_t>(std::ceil(e.cx + r));
  const auto n = static_cast<std::ptrdiff_t>(size);
  for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(lo_y, 0); y <= std::min(hi_y, n - 1); ++y) {
    for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(lo_x, 0); x <= std::min(hi_x, n - 1); ++x) {
      if (!e.contains(static_cast<double>(x), static_cast<double>(y))) continue;
      const auto i = static_cast<std::size_t>(y * n + x);
      const double a = opacity * (0.85 + 0.15 * rng.uniform());
      for (std::size_t c = 0; c < 3; ++c) rgb[i][c] = (1 - a) * rgb[i][c] + a * color[c];
      if (mask) (*mask)[i] = 1;
    }
  }
}

LabeledItem make_item(std::size_t index, int label, const GeneratorParams& p, Rng& rng) {
  const std::size_t size = p.size;
  const std::size_t pixels = size * size;
  const auto noise = value_noise(size, rng);
  std::vector<Color> rgb(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    const double t = std::clamp((noise[i] - 0.3) / 0.45, 0.0, 1.0);
    for (std::size_t c = 0; c < 3; ++c) rgb[i][c] = (1 - t) * kBackground[c] + t * kTissue[c];
  }

  const auto nuclei = p.min_nuclei + static_cast<int>(rng.below(
                                         static_cast<std::uint64_t>(p.max_nuclei - p.min_nuclei + 1)));
  const double extent = static_cast<double>(size);
  for (int k = 0; k < nuclei; ++k) {
    const Ellipse e{rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0.8, 1.6),
                    rng.uniform(0.8, 1.6), rng.uniform(0, std::numbers::pi)};
    paint(rgb, size, e, kNucleus, 0.75, nullptr, rng);
  }

  LabeledItem item;
  item.label = label;
  char name[32];
  std::snprintf(name, sizeof name, "%s_%04zu", label == kDiseased ? "diseased" : "healthy", index);
  item.name = name;

  if (label == kDiseased) {
    // Redraw the blob layout until the union area lands in the declared range.
    std::vector<std::uint8_t> mask;
    std::vector<Color> painted;
    for (;;) {
      mask.assign(pixels, 0);
      painted = rgb;
      const auto blobs = p.min_blobs + static_cast<int>(rng.below(
                                           static_cast<std::uint64_t>(p.max_blobs - p.min_blobs + 1)));
      const double margin = p.max_blob_radius;
      for (int k = 0; k < blobs; ++k) {
        const Ellipse e{rng.uniform(margin, extent - margin), rng.uniform(margin, extent - margin),
                        rng.uniform(p.min_blob_radius, p.max_blob_radius),
                        rng.uniform(p.min_blob_radius, p.max_blob_radius),
                        rng.uniform(0, std::numbers::pi)};
        paint(painted, size, e, kBlob, 0.8, &mask, rng);
      }
      const double f = mask_fraction(mask);
      if (f >= p.min_mask_fraction && f <= p.max_mask_fraction) break;
    }
    rgb = std::move(painted);
    item.mask = std::move(mask);
  }

  for (auto& px : rgb) {
    for (double& v : px) v += p.pixel_noise * rng.normal();
  }
  // Class-independent global brightness, so mean intensity carries no label signal.
  double mean = 0.0;
  for (const auto& px : rgb) mean += px[0] + px[1] + px[2];
  mean /= static_cast<double>(3 * pixels);
  const double shift = rng.uniform(p.min_mean, p.max_mean) - mean;

  item.image = Tensor4({1, 3, size, size});
  for (std::size_t i = 0; i < pixels; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      item.image[c * pixels + i] = std::clamp(rgb[i][c] + shift, 0.0, 1.0);
    }
  }
  return item;
}

}  // namespace

LabeledSet generate(std::size_t n, std::uint64_t seed, const GeneratorParams& params) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("generate: count must be even and >= 2, got " + std::to_string(n));
  }
  if (params.size < 16 || params.min_blobs < 1 || params.max_blobs < params.min_blobs ||
      params.min_nuclei < 0 || params.max_nuclei < params.min_nuclei ||
      !(params.min_mask_fraction < params.max_mask_fraction)) {
    throw std::invalid_argument("generate: inconsistent generator parameters");
  }
  LabeledSet set;
  set.seed = seed;
  set.provenance = "synthetic texture generator, seed " + std::to_string(seed);
  set.items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "item-" + std::to_string(i)));
    set.items.push_back(make_item(i, i % 2 == 0 ? kHealthy : kDiseased, params, rng));
  }
  return set;
}

// ----------------------------------------------------------------- split

std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction,
                                        std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<bool> in_train(set.size(), false);
  for (int label : {kHealthy, kDiseased}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < set.size(); ++i) {
      if (set.items[i].label == label) members.push_back(i);
    }
    shuffle(members, rng);
    const auto take = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(members.size())));
    for (std::size_t k = 0; k < take; ++k) in_train[members[k]] = true;
  }
  LabeledSet train;
  LabeledSet test;
  train.seed = test.seed = set.seed;
  train.provenance = set.provenance + "; train split";
  test.provenance = set.provenance + "; test split";
  for (std::size_t i = 0; i < set.size(); ++i) {
    (in_train[i] ? train : test).items.push_back(set.items[i]);
  }
  return {std::move(train), std::move(test)};
}

// -------------------------------------------------------------------- io

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

LabeledSet load_dir(const fs::path& root, std::vector<std::string>* warnings) {
  if (!fs::is_directory(root)) throw DatasetError("dataset directory '" + root.string() + "' not found");
  LabeledSet set;
  set.provenance = "loaded from " + root.string();
  const fs::path masks = root / "masks";
  std::set<std::string> seen;
  for (const auto& [sub, label] : {std::pair{"healthy", kHealthy}, std::pair{"diseased", kDiseased}}) {
    const fs::path dir = root / sub;
    if (!fs::is_directory(dir)) throw DatasetError("class directory '" + dir.string() + "' not found");
    const auto files = sorted_pngs(dir);
    if (files.empty()) throw DatasetError("class directory '" + dir.string() + "' is empty");
    for (const auto& file : files) {
      LabeledItem item;
      item.name = file.stem().string();
      if (!seen.insert(item.name).second) {
        throw DatasetError("duplicate image stem '" + item.name + "' across class directories");
      }
      item.label = label;
      item.image = to_tensor(read_png_rgb(file));
      const fs::path mask_path = masks / (item.name + ".png");
      if (fs::exists(mask_path)) {
        if (label == kHealthy) {
          if (warnings) warnings->push_back("mask for healthy image '" + item.name + "' ignored");
        } else {
          const GrayImage m = read_png_gray(mask_path);
          const Shape4& s = item.image.shape();
          if (m.width != s.w || m.height != s.h) {
            throw DatasetError("mask '" + mask_path.string() + "' does not match its image size");
          }
          std::vector<std::uint8_t> bits(m.pixels.size());
          std::transform(m.pixels.begin(), m.pixels.end(), bits.begin(),
                         [](std::uint8_t v) { return static_cast<std::uint8_t>(v >= 128 ? 1 : 0); });
          item.mask = std::move(bits);
        }
      }
      set.items.push_back(std::move(item));
    }
  }
  return set;
}

std::vector<fs::path> save_dir(const LabeledSet& set, const fs::path& root) {
  fs::create_directories(root / "healthy");
  fs::create_directories(root / "diseased");
  bool any_mask = std::any_of(set.items.begin(), set.items.end(),
                              [](const auto& it) { return it.label == kDiseased && it.mask; });
  if (any_mask) fs::create_directories(root / "masks");
  std::vector<fs::path> written;
  for (const auto& item : set.items) {
    const fs::path file = root / (item.label == kDiseased ? "diseased" : "healthy") / (item.name + ".png");
    write_png(file, to_rgb(item.image));
    written.push_back(file);
    if (item.label == kDiseased && item.mask) {
      const Shape4& s = item.image.shape();
      GrayImage m(s.w, s.h);
      std::transform(item.mask->begin(), item.mask->end(), m.pixels.begin(),
                     [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
      const fs::path mask_file = root / "masks" / (item.name + ".png");
      write_png(mask_file, m);
      written.push_back(mask_file);
    }
  }
  return written;
}

}  // namespace pathxai
