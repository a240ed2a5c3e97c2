#include "pathxai/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace pathxai {

std::string to_string(const Shape4& s) {
  return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) +
         ", " + std::to_string(s.w) + ")";
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

Tensor4::Tensor4(Shape4 shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw ShapeError("tensor of shape " + to_string(shape_) + " needs " +
                     std::to_string(shape_.size()) + " values, got " +
                     std::to_string(values_.size()));
  }
}

std::span<double> Tensor4::item(std::size_t n) {
  return std::span<double>(values_).subspan(n * shape_.item_size(), shape_.item_size());
}

std::span<const double> Tensor4::item(std::size_t n) const {
  return std::span<const double>(values_).subspan(n * shape_.item_size(), shape_.item_size());
}

Tensor4 Tensor4::reshaped(Shape4 shape) const {
  if (shape.size() != shape_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
  }
  return Tensor4(shape, values_);
}

Tensor4 Tensor4::slice(std::size_t first, std::size_t count) const {
  if (first + count > shape_.n) {
    throw ShapeError("slice [" + std::to_string(first) + ", " + std::to_string(first + count) +
                     ") out of batch range " + std::to_string(shape_.n));
  }
  const auto item = shape_.item_size();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(first * item),
                        values_.begin() + static_cast<std::ptrdiff_t>((first + count) * item));
  return Tensor4({count, shape_.c, shape_.h, shape_.w}, std::move(v));
}

void Tensor4::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor4::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void debug_check_finite([[maybe_unused]] const Tensor4& t, [[maybe_unused]] const char* where) {
#ifndef NDEBUG
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + where);
  }
#endif
}

Tensor4 stack(std::span<const Tensor4> items) {
  if (items.empty()) throw ShapeError("cannot stack an empty list of tensors");
  const Shape4 one = items.front().shape();
  std::vector<double> v;
  v.reserve(items.size() * one.item_size() * one.n);
  std::size_t n = 0;
  for (const auto& t : items) {
    const Shape4& s = t.shape();
    if (s.c != one.c || s.h != one.h || s.w != one.w) {
      throw ShapeError("stack: item shape " + to_string(s) + " differs from " + to_string(one));
    }
    v.insert(v.end(), t.values().begin(), t.values().end());
    n += s.n;
  }
  return Tensor4({n, one.c, one.h, one.w}, std::move(v));
}

}  // namespace pathxai
