#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pathxai/image.hpp"
#include "pathxai/network.hpp"

namespace pathxai {

class GradCamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Class-discriminative relevance map in [0, 1].
struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // coarse map, row-major
  std::size_t source_layer = 0;
  int target_class = 0;
  /// Channel weights: spatial mean of d(logit)/d(feature map).
  std::vector<double> channel_weights;
  /// True when the rectified map was constant and normalized to all zeros.
  bool constant = false;

  std::size_t upsampled_height = 0;
  std::size_t upsampled_width = 0;
  std::vector<double> upsampled;  // full-resolution copy
};

/// Weighted-sum core shared by every entry point: given K feature maps and the
/// gradient of the target score with respect to each (both (1, K, h, w)),
/// weights each map by its mean gradient, rectifies the sum and min-max
/// normalizes it. A constant rectified map becomes all zeros.
Heatmap gradcam_from_maps(const Tensor4& feature_maps, const Tensor4& gradients);

/// Full Grad-CAM for one (1, c, h, w) image: eval-mode forward, backprop of the
/// pre-softmax logit of `target_class` to conv layer `layer` (default: last
/// conv), weighting, normalization, and corner-aligned bilinear upsampling to
/// the input resolution. Throws GradCamError for a non-conv layer.
Heatmap gradcam_compute(const Network& net, const Tensor4& image, int target_class,
                        std::optional<std::size_t> layer = std::nullopt);

/// Same, reusing an existing eval-mode forward cache of `net` for a single image.
Heatmap gradcam_compute(const Network& net, const ForwardCache& cache, int target_class,
                        std::optional<std::size_t> layer = std::nullopt);

/// Corner-aligned bilinear resize of an h x w map to out_h x out_w.
std::vector<double> bilinear_upsample(std::span<const double> map, std::size_t h, std::size_t w,
                                      std::size_t out_h, std::size_t out_w);

/// out = (1 - alpha) * image + alpha * jet(heatmap), rounded and clamped to 8 bits.
RgbImage overlay(const Heatmap& heatmap, const RgbImage& image, double alpha = 0.4);

struct LocalizationScore {
  double fraction = 0.0;
  bool degenerate = false;  // heatmap had no mass at all
};

/// Share of the upsampled heatmap mass that falls inside `mask` (non-zero = inside).
LocalizationScore localization_score(const Heatmap& heatmap, std::span<const std::uint8_t> mask);
LocalizationScore localization_score(std::span<const double> heatmap,
                                     std::span<const std::uint8_t> mask);

}  // namespace pathxai
