#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hrgr::num {

// Dimensions of an Array. Stored inline (rank <= 4) so that the many small
// temporaries recorded on a Tape cost a single heap allocation each.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t i) const { return dims_[i]; }
  // Product of the dims; 0 for the rank-0 (null) shape.
  std::size_t size() const;
  std::vector<std::size_t> to_vector() const;
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

// Dense row-major array of doubles. Rank-1 arrays behave as 1 x n rows in
// every 2-D helper.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> data);

  static Array zeros(std::size_t rows, std::size_t cols) { return Array(Shape{rows, cols}); }
  static Array row(std::vector<double> values);
  static Array scalar(double v) { return Array(Shape{1, 1}, v); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool all_finite() const;
  void fill(double v);

  friend bool operator==(const Array&, const Array&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Named parameter arrays. Ordered so that iteration (and therefore every
// reduction over parameters) is deterministic.
using ParamStore = std::map<std::string, Array, std::less<>>;
using Gradients = std::map<std::string, Array, std::less<>>;

}  // namespace hrgr::num
