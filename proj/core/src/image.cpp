#include "pathxai/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace pathxai {

namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, png_uint_32 format,
                                   std::size_t& width, std::size_t& height) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&img, path.c_str()) == 0) {
    throw ImageError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  img.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr) == 0) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw ImageError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  width = img.width;
  height = img.height;
  return buffer;
}

void write(const std::filesystem::path& path, png_uint_32 format, std::size_t width,
           std::size_t height, const std::vector<std::uint8_t>& pixels, std::size_t channels) {
  if (pixels.size() != width * height * channels || width == 0 || height == 0) {
    throw ImageError("image buffer size does not match its dimensions for '" + path.string() + "'");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (png_image_write_to_file(&img, path.c_str(), 0, pixels.data(), 0, nullptr) == 0) {
    throw ImageError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

}  // namespace

RgbImage read_png_rgb(const std::filesystem::path& path) {
  RgbImage out;
  out.pixels = read_png(path, PNG_FORMAT_RGB, out.width, out.height);
  return out;
}

GrayImage read_png_gray(const std::filesystem::path& path) {
  GrayImage out;
  out.pixels = read_png(path, PNG_FORMAT_GRAY, out.width, out.height);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write(path, PNG_FORMAT_RGB, image.width, image.height, image.pixels, 3);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write(path, PNG_FORMAT_GRAY, image.width, image.height, image.pixels, 1);
}

std::uint8_t quantize(double v) {
  const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

RgbImage to_rgb(const Tensor4& image) {
  const Shape4& s = image.shape();
  if (s.n != 1 || s.c != 3) throw ShapeError("to_rgb expects a (1, 3, h, w) tensor, got " + to_string(s));
  RgbImage out(s.w, s.h);
  for (std::size_t y = 0; y < s.h; ++y) {
    for (std::size_t x = 0; x < s.w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        out.pixels[(y * s.w + x) * 3 + c] = quantize(image.at(0, c, y, x));
      }
    }
  }
  return out;
}

Tensor4 to_tensor(const RgbImage& image) {
  Tensor4 t({1, 3, image.height, image.width});
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        t.at(0, c, y, x) = image.pixels[(y * image.width + x) * 3 + c] / 255.0;
      }
    }
  }
  return t;
}

}  // namespace pathxai
