#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathxai {

/// Thrown when tensor or parameter dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a NaN or infinity shows up where only finite values are allowed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape4 {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  [[nodiscard]] std::size_t size() const { return n * c * h * w; }
  [[nodiscard]] std::size_t item_size() const { return c * h * w; }
  [[nodiscard]] std::size_t plane() const { return h * w; }

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

std::string to_string(const Shape4& s);

/// Dense (batch, channel, height, width) array of doubles in row-major order.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> values);

  [[nodiscard]] const Shape4& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] bool empty() const { return values_.empty(); }

  [[nodiscard]] std::span<double> values() { return values_; }
  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] double* data() { return values_.data(); }
  [[nodiscard]] const double* data() const { return values_.data(); }

  [[nodiscard]] std::size_t offset(std::size_t n, std::size_t c, std::size_t h,
                                   std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values_[offset(n, c, h, w)];
  }
  [[nodiscard]] double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values_[offset(n, c, h, w)];
  }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  [[nodiscard]] std::span<double> item(std::size_t n);
  [[nodiscard]] std::span<const double> item(std::size_t n) const;

  /// Same values, new shape with equal element count.
  [[nodiscard]] Tensor4 reshaped(Shape4 shape) const;
  /// Copy of batch items [first, first + count).
  [[nodiscard]] Tensor4 slice(std::size_t first, std::size_t count) const;

  void fill(double v);
  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape4 shape_{};
  std::vector<double> values_;
};

/// Throws NumericError naming `where` if any value is non-finite. Active in
/// debug builds only; release builds compile it away.
void debug_check_finite(const Tensor4& t, const char* where);

/// Stacks single-item tensors of identical shape into one batch.
Tensor4 stack(std::span<const Tensor4> items);

}  // namespace pathxai
