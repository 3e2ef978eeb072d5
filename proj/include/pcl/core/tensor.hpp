#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pcl/core/errors.hpp"

namespace pcl {

using Index = std::int64_t;
using Shape = std::vector<Index>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

inline Index shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

/// Dense row-major array of `Scalar` with a runtime shape.
///
/// Tensors are plain values: copying copies the payload. Matrix views over
/// the payload are exposed as Eigen maps so that numeric kernels can use
/// Eigen expressions directly.
template <typename Scalar>
class Tensor {
 public:
  using value_type = Scalar;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(check_shape(shape_), Scalar(0)) {}

  Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<Index>(data_.size()) != check_shape(shape_)) {
      throw ShapeError("tensor payload of " + std::to_string(data_.size()) +
                       " values does not match shape " + shape_str(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  static Tensor scalar(Scalar value) { return Tensor({1}, {value}); }

  /// Copies an Eigen matrix expression into a rank-2 tensor.
  template <typename Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Tensor t({static_cast<Index>(m.rows()), static_cast<Index>(m.cols())});
    t.matrix() = m.template cast<Scalar>();
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
  Index size() const noexcept { return static_cast<Index>(data_.size()); }
  bool empty() const noexcept { return data_.empty(); }

  /// Dimension `axis`; negative values count from the back.
  Index dim(Index axis) const {
    const Index r = rank();
    const Index a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_str(shape_));
    return shape_[static_cast<std::size_t>(a)];
  }

  Scalar* data() noexcept { return data_.data(); }
  const Scalar* data() const noexcept { return data_.data(); }
  std::span<Scalar> values() noexcept { return data_; }
  std::span<const Scalar> values() const noexcept { return data_; }
  const std::vector<Scalar>& storage() const noexcept { return data_; }

  Scalar& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  Scalar& at(Index r, Index c) { return data_[static_cast<std::size_t>(r * shape_.back() + c)]; }
  Scalar at(Index r, Index c) const { return data_[static_cast<std::size_t>(r * shape_.back() + c)]; }

  /// Leading dimension times the product of the rest, as a row-major matrix.
  MatrixMap<Scalar> matrix() { return matrix(leading(), trailing()); }
  ConstMatrixMap<Scalar> matrix() const { return matrix(leading(), trailing()); }

  MatrixMap<Scalar> matrix(Index rows, Index cols) {
    check_view(rows, cols);
    return MatrixMap<Scalar>(data_.data(), rows, cols);
  }
  ConstMatrixMap<Scalar> matrix(Index rows, Index cols) const {
    check_view(rows, cols);
    return ConstMatrixMap<Scalar>(data_.data(), rows, cols);
  }

  /// Product of all dims but the last, times the last dim.
  MatrixMap<Scalar> rows_view() { return matrix(size() / last(), last()); }
  ConstMatrixMap<Scalar> rows_view() const { return matrix(size() / last(), last()); }

  Eigen::Map<Vector<Scalar>> vector() { return Eigen::Map<Vector<Scalar>>(data_.data(), size()); }
  Eigen::Map<const Vector<Scalar>> vector() const { return Eigen::Map<const Vector<Scalar>>(data_.data(), size()); }

  Tensor reshaped(Shape shape) const {
    if (check_shape(shape) != size()) {
      throw ShapeError("cannot reshape " + shape_str(shape_) + " into " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(out));
  }

  bool all_finite() const {
    for (Scalar v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

 private:
  static Index check_shape(const Shape& shape) {
    for (Index d : shape) {
      if (d < 0) throw ShapeError("negative dimension in shape " + shape_str(shape));
    }
    return shape_numel(shape);
  }

  Index leading() const { return shape_.empty() ? 1 : shape_.front(); }
  Index trailing() const { return leading() == 0 ? 0 : size() / leading(); }
  Index last() const { return shape_.empty() ? 1 : std::max<Index>(shape_.back(), 1); }

  void check_view(Index rows, Index cols) const {
    if (rows * cols != size()) {
      throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) + " does not cover " +
                       shape_str(shape_));
    }
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace pcl
