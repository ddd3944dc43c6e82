#include "hrgr/numerics/array.hpp"

#include <algorithm>
#include <cmath>

#include "hrgr/errors.hpp"

namespace hrgr::num {

Shape::Shape(std::initializer_list<std::size_t> dims)
    : Shape(std::span<const std::size_t>(dims.begin(), dims.size())) {}

Shape::Shape(std::span<const std::size_t> dims) {
  if (dims.size() > kMaxRank) {
    throw DimensionError("Shape: rank " + std::to_string(dims.size()) + " exceeds " +
                         std::to_string(kMaxRank));
  }
  for (std::size_t d : dims) {
    if (d == 0) throw DimensionError("Shape: dimensions must be positive");
  }
  std::copy(dims.begin(), dims.end(), dims_.begin());
  rank_ = dims.size();
}

std::size_t Shape::size() const {
  if (rank_ == 0) return 0;
  std::size_t n = 1;
  for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

std::vector<std::size_t> Shape::to_vector() const {
  return {dims_.begin(), dims_.begin() + static_cast<std::ptrdiff_t>(rank_)};
}

std::string Shape::str() const {
  if (rank_ == 0) return "()";
  std::string s;
  for (std::size_t i = 0; i < rank_; ++i) {
    if (i) s += 'x';
    s += std::to_string(dims_[i]);
  }
  return s;
}

Array::Array(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

Array::Array(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (shape_.size() != data_.size()) {
    throw DimensionError("Array: shape " + shape_.str() + " holds " +
                         std::to_string(shape_.size()) + " values, got " +
                         std::to_string(data_.size()));
  }
}

Array Array::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Array(Shape{1, n}, std::move(values));
}

std::size_t Array::rows() const {
  if (shape_.rank() < 2) return shape_.rank() == 0 ? 0 : 1;
  std::size_t r = 1;
  for (std::size_t i = 0; i + 1 < shape_.rank(); ++i) r *= shape_[i];
  return r;
}

std::size_t Array::cols() const {
  return shape_.rank() == 0 ? 0 : shape_[shape_.rank() - 1];
}

bool Array::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

}  // namespace hrgr::num
