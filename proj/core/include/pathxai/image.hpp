#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "pathxai/tensor.hpp"

namespace pathxai {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit interleaved RGB.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// 8-bit single channel.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // width * height

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h, 0) {}
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

RgbImage read_png_rgb(const std::filesystem::path& path);
GrayImage read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// [0,1] (1, 3, h, w) tensor -> 8-bit RGB with round-to-nearest; values are clamped.
RgbImage to_rgb(const Tensor4& image);
/// 8-bit RGB -> (1, 3, h, w) tensor of v / 255.
Tensor4 to_tensor(const RgbImage& image);

std::uint8_t quantize(double v);

}  // namespace pathxai
