#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pathxai/tensor.hpp"

namespace pathxai {

inline constexpr int kHealthy = 0;
inline constexpr int kDiseased = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LabeledItem {
  std::string name;   // file stem, unique within a set
  Tensor4 image;      // (1, 3, h, w), values in [0, 1]
  int label = kHealthy;
  /// Row-major h*w region mask (0 or 1); diseased items only.
  std::optional<std::vector<std::uint8_t>> mask;
};

struct LabeledSet {
  std::vector<LabeledItem> items;
  std::uint64_t seed = 0;
  std::string provenance;

  [[nodiscard]] std::size_t size() const { return items.size(); }
  [[nodiscard]] std::size_t count(int label) const;
  /// Throws DatasetError unless both classes are present.
  void require_both_classes(const std::string& what) const;
};

/// Knobs of the synthetic two-class texture generator.
struct GeneratorParams {
  std::size_t size = 64;
  int min_blobs = 3;
  int max_blobs = 8;
  double min_blob_radius = 2.5;
  double max_blob_radius = 6.0;
  /// Accepted range of the union blob area as a fraction of the image.
  double min_mask_fraction = 0.01;
  double max_mask_fraction = 0.20;
  /// Small scattered nuclei present in both classes.
  int min_nuclei = 20;
  int max_nuclei = 40;
  /// Per-image mean intensity target, drawn independently of the class.
  double min_mean = 0.55;
  double max_mean = 0.70;
  double pixel_noise = 0.03;
};

/// Deterministic synthetic set: n/2 healthy textures, n/2 diseased textures
/// with 3-8 dark elliptical blob clusters recorded in the mask. Items alternate
/// healthy, diseased. Throws std::invalid_argument for odd or < 2 counts.
LabeledSet generate(std::size_t n, std::uint64_t seed, const GeneratorParams& params = {});

/// Stratified seeded split. Each class contributes round(fraction * class_count)
/// items to train; the rest go to test. Original relative order is kept inside
/// each part.
std::pair<LabeledSet, LabeledSet> split(const LabeledSet& set, double train_fraction,
                                        std::uint64_t seed);

/// Reads `<root>/healthy/*.png`, `<root>/diseased/*.png` and optional
/// `<root>/masks/<stem>.png` in lexicographic order. Masks found for healthy
/// images are ignored and reported through `warnings`.
LabeledSet load_dir(const std::filesystem::path& root, std::vector<std::string>* warnings = nullptr);

/// Writes the layout read by load_dir; returns every file written in order.
std::vector<std::filesystem::path> save_dir(const LabeledSet& set, const std::filesystem::path& root);

/// Fraction of mask pixels that are set.
double mask_fraction(const std::vector<std::uint8_t>& mask);

/// Stacks the images of the given items into one batch.
Tensor4 batch_images(const LabeledSet& set, std::span<const std::size_t> indices);

}  // namespace pathxai
