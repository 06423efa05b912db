#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adrqn::numkit {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Raised when operand shapes are incompatible. The message names both shapes.
class DimensionError : public std::invalid_argument {
 public:
  DimensionError(const std::string& what, const Shape& lhs, const Shape& rhs)
      : std::invalid_argument(what + ": " + shape_string(lhs) + " vs " + shape_string(rhs)),
        lhs_(lhs),
        rhs_(rhs) {}

  const Shape& lhs() const { return lhs_; }
  const Shape& rhs() const { return rhs_; }

 private:
  Shape lhs_;
  Shape rhs_;
};

/// Raised when a NaN or Inf shows up where only finite values are allowed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major array of doubles.
///
/// A default-constructed tensor is empty (no shape, no data). Every other
/// tensor satisfies `shape_size(shape()) == size()` with all dimensions > 0.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    check_dims();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, const std::vector<double>& data) : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    check_dims();
    if (shape_size(shape_) != data_.size()) {
      throw DimensionError("tensor data length does not match shape", shape_, Shape{data_.size()});
    }
  }

  /// Rank-1 tensor from a literal list.
  static Tensor vector(std::initializer_list<double> values) {
    return Tensor(Shape{values.size()}, std::vector<double>(values));
  }

  /// Rank-2 tensor from nested literal rows.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal", Shape{r, c}, Shape{r, row.size()});
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_, 0.0); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  /// Same data, new shape. Sizes must agree.
  Tensor reshaped(Shape shape) const& {
    Tensor out = *this;
    out.reshape(std::move(shape));
    return out;
  }
  Tensor reshaped(Shape shape) && {
    reshape(std::move(shape));
    return std::move(*this);
  }
  void reshape(Shape shape) {
    if (shape_size(shape) != data_.size()) throw DimensionError("reshape changes element count", shape_, shape);
    shape_ = std::move(shape);
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  Tensor& operator+=(const Tensor& rhs) {
    require_same_shape(rhs, "tensor +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
    return *this;
  }

  Tensor& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  void require_same_shape(const Tensor& other, const char* what) const {
    if (shape_ != other.shape_) throw DimensionError(what, shape_, other.shape_);
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_dims() const {
    for (std::size_t d : shape_) {
      if (d == 0) throw DimensionError("tensor dimensions must be positive", shape_, Shape{});
    }
  }

  Shape shape_;
  // fixed alignment keeps Eigen's vectorized reduction order independent of the heap
  std::vector<double, Eigen::aligned_allocator<double>> data_;
};

/// Stacks equally shaped tensors along a new leading axis.
inline Tensor stack(std::span<const Tensor> items) {
  if (items.empty()) throw std::invalid_argument("stack: no tensors");
  const Shape& inner = items.front().shape();
  Shape shape{items.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  Tensor out(std::move(shape));
  double* dst = out.data();
  for (const Tensor& t : items) {
    if (t.shape() != inner) throw DimensionError("stack: shape mismatch", inner, t.shape());
    dst = std::copy(t.values().begin(), t.values().end(), dst);
  }
  return out;
}

/// Concatenates two [B, n] and [B, m] tensors into [B, n + m].
inline Tensor concat_columns(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("concat_columns expects [B, n] and [B, m]", a.shape(), b.shape());
  }
  const std::size_t rows = a.dim(0), na = a.dim(1), nb = b.dim(1);
  Tensor out(Shape{rows, na + nb});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * na, na, out.data() + r * (na + nb));
    std::copy_n(b.data() + r * nb, nb, out.data() + r * (na + nb) + na);
  }
  return out;
}

/// Inverse of concat_columns: splits [B, n + m] at column n.
inline std::pair<Tensor, Tensor> split_columns(const Tensor& x, std::size_t n) {
  if (x.rank() != 2 || n == 0 || n >= x.dim(1)) {
    throw DimensionError("split_columns: bad split point", x.shape(), Shape{n});
  }
  const std::size_t rows = x.dim(0), total = x.dim(1), m = total - n;
  Tensor a(Shape{rows, n}), b(Shape{rows, m});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * total, n, a.data() + r * n);
    std::copy_n(x.data() + r * total + n, m, b.data() + r * m);
  }
  return {std::move(a), std::move(b)};
}

/// One-hot rows: [ids.size(), depth].
inline Tensor one_hot(std::span<const std::size_t> ids, std::size_t depth) {
  Tensor out(Shape{ids.size(), depth});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= depth) throw std::out_of_range("one_hot: id " + std::to_string(ids[r]) + " >= " + std::to_string(depth));
    out.at(r, ids[r]) = 1.0;
  }
  return out;
}

}  // namespace adrqn::numkit
