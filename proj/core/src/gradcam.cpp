#include "pathxai/gradcam.hpp"

#include <algorithm>
#include <cmath>

#include "pathxai/colormap.hpp"

namespace pathxai {

Heatmap gradcam_from_maps(const Tensor4& feature_maps, const Tensor4& gradients) {
  const Shape4& s = feature_maps.shape();
  if (s.n != 1) throw ShapeError("gradcam: expects a single item, got " + to_string(s));
  if (gradients.shape() != s) {
    throw ShapeError("gradcam: gradient shape " + to_string(gradients.shape()) +
                     " differs from feature maps " + to_string(s));
  }
  Heatmap hm;
  hm.height = s.h;
  hm.width = s.w;
  hm.channel_weights.assign(s.c, 0.0);
  hm.values.assign(s.plane(), 0.0);
  const double area = static_cast<double>(s.plane());
  for (std::size_t k = 0; k < s.c; ++k) {
    const double* g = gradients.data() + gradients.offset(0, k, 0, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.plane(); ++i) sum += g[i];
    hm.channel_weights[k] = sum / area;
  }
  for (std::size_t k = 0; k < s.c; ++k) {
    const double* a = feature_maps.data() + feature_maps.offset(0, k, 0, 0);
    const double wk = hm.channel_weights[k];
    for (std::size_t i = 0; i < s.plane(); ++i) hm.values[i] += wk * a[i];
  }
  for (double& v : hm.values) v = std::max(v, 0.0);

  const auto [lo, hi] = std::minmax_element(hm.values.begin(), hm.values.end());
  const double min = *lo;
  const double range = *hi - min;
  if (!(range > 0.0)) {
    hm.constant = true;
    std::fill(hm.values.begin(), hm.values.end(), 0.0);
  } else {
    for (double& v : hm.values) v = (v - min) / range;
  }
  return hm;
}

Heatmap gradcam_compute(const Network& net, const ForwardCache& cache, int target_class,
                        std::optional<std::size_t> layer) {
  const auto convs = net.conv_layers();
  if (convs.empty()) throw GradCamError("gradcam: network has no conv layer");
  const std::size_t conv = layer.value_or(convs.back());
  if (conv >= net.size() || kind_of(net.layers()[conv]) != LayerKind::conv2d) {
    throw GradCamError("gradcam: layer " + std::to_string(conv) + " is not a conv2d layer");
  }
  if (cache.activations.size() != net.size() + 1) {
    throw GradCamError("gradcam: missing or foreign forward cache");
  }
  if (cache.input().shape().n != 1) throw ShapeError("gradcam: cache must hold a single image");
  const Shape4 logit_shape = cache.logits().shape();
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= logit_shape.c) {
    throw GradCamError("gradcam: target class " + std::to_string(target_class) + " out of range");
  }

  const std::size_t tap = net.feature_tap(conv);
  Tensor4 seed(logit_shape);
  seed[static_cast<std::size_t>(target_class)] = 1.0;
  Tensor4 grad_maps;
  net.backward(cache, seed, nullptr, tap, &grad_maps);

  Heatmap hm = gradcam_from_maps(cache.output_of(tap), grad_maps);
  hm.source_layer = conv;
  hm.target_class = target_class;
  const Shape4& in = cache.input().shape();
  hm.upsampled_height = in.h;
  hm.upsampled_width = in.w;
  hm.upsampled = bilinear_upsample(hm.values, hm.height, hm.width, in.h, in.w);
  return hm;
}

Heatmap gradcam_compute(const Network& net, const Tensor4& image, int target_class,
                        std::optional<std::size_t> layer) {
  if (image.shape().n != 1) throw ShapeError("gradcam: expects a single image (n = 1)");
  const ForwardCache cache = net.forward(image, Mode::eval);
  return gradcam_compute(net, cache, target_class, layer);
}

std::vector<double> bilinear_upsample(std::span<const double> map, std::size_t h, std::size_t w,
                                      std::size_t out_h, std::size_t out_w) {
  if (map.size() != h * w || h == 0 || w == 0 || out_h == 0 || out_w == 0) {
    throw ShapeError("bilinear_upsample: bad dimensions");
  }
  auto coord = [](std::size_t i, std::size_t in, std::size_t out) {
    return out == 1 ? 0.0
                    : static_cast<double>(i) * static_cast<double>(in - 1) /
                          static_cast<double>(out - 1);
  };
  std::vector<double> out(out_h * out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = coord(y, h, out_h);
    const auto y0 = std::min(static_cast<std::size_t>(fy), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = coord(x, w, out_w);
      const auto x0 = std::min(static_cast<std::size_t>(fx), w - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = (1.0 - tx) * map[y0 * w + x0] + tx * map[y0 * w + x1];
      const double bottom = (1.0 - tx) * map[y1 * w + x0] + tx * map[y1 * w + x1];
      out[y * out_w + x] = (1.0 - ty) * top + ty * bottom;
    }
  }
  return out;
}

RgbImage overlay(const Heatmap& heatmap, const RgbImage& image, double alpha) {
  if (heatmap.upsampled_width != image.width || heatmap.upsampled_height != image.height ||
      heatmap.upsampled.size() != image.width * image.height) {
    throw ShapeError("overlay: heatmap is " + std::to_string(heatmap.upsampled_width) + "x" +
                     std::to_string(heatmap.upsampled_height) + ", image is " +
                     std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("overlay: alpha must lie in [0, 1]");
  RgbImage out(image.width, image.height);
  for (std::size_t i = 0; i < heatmap.upsampled.size(); ++i) {
    const Rgb8 c = jet(heatmap.upsampled[i]);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double v = (1.0 - alpha) * image.pixels[i * 3 + ch] + alpha * c[ch];
      out.pixels[i * 3 + ch] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
  }
  return out;
}

LocalizationScore localization_score(std::span<const double> heatmap,
                                     std::span<const std::uint8_t> mask) {
  if (heatmap.size() != mask.size()) {
    throw ShapeError("localization_score: heatmap has " + std::to_string(heatmap.size()) +
                     " values, mask " + std::to_string(mask.size()));
  }
  double total = 0.0;
  double inside = 0.0;
  for (std::size_t i = 0; i < heatmap.size(); ++i) {
    total += heatmap[i];
    if (mask[i] != 0) inside += heatmap[i];
  }
  if (!(total > 0.0)) return {0.0, true};
  return {inside / total, false};
}

LocalizationScore localization_score(const Heatmap& heatmap, std::span<const std::uint8_t> mask) {
  return localization_score(std::span<const double>(heatmap.upsampled), mask);
}

}  // namespace pathxai
