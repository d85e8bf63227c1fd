// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "sep/error.hpp"

namespace sep {

using Index = std::int64_t;

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

template <class T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                "only f32 and f64 tensors are supported");
  return std::is_same_v<T, float> ? DType::F32 : DType::F64;
}

inline std::string_view dtype_name(DType d) { return d == DType::F32 ? "f32" : "f64"; }

/// Batch-major N x C x H x W extent. Every dimension is at least 1.
struct Shape {
  Index n = 1;
  Index c = 1;
  Index h = 1;
  Index w = 1;

  constexpr Index numel() const { return n * c * h * w; }
  constexpr Index plane_size() const { return h * w; }
  constexpr bool valid() const { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

/// Dense row-major NCHW tensor. Values, not views: copying copies the data.
template <class T>
class Tensor {
 public:
  using Scalar = T;
  using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<RowMatrix>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix>;
  using ArrayMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
  using ConstArrayMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

  Tensor() : Tensor(Shape{}) {}

  explicit Tensor(const Shape& shape, T fill = T(0)) : shape_(checked(shape)) {
    data_.assign(static_cast<std::size_t>(shape_.numel()), fill);
  }

  Tensor(const Shape& shape, std::vector<T> data) : shape_(checked(shape)), data_(std::move(data)) {
    if (static_cast<Index>(data_.size()) != shape_.numel()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_.str());
    }
  }

  static Tensor zeros(const Shape& s) { return Tensor(s); }
  static Tensor ones(const Shape& s) { return Tensor(s, T(1)); }
  static Tensor full(const Shape& s, T v) { return Tensor(s, v); }

  const Shape& shape() const { return shape_; }
  Index numel() const { return shape_.numel(); }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  T& operator()(Index n, Index c, Index h, Index w) { return data_[offset(n, c, h, w)]; }
  const T& operator()(Index n, Index c, Index h, Index w) const { return data_[offset(n, c, h, w)]; }
  T& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  const T& operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  const std::vector<T>& storage() const { return data_; }

  ArrayMap array() { return ArrayMap(data_.data(), numel()); }
  ConstArrayMap array() const { return ConstArrayMap(data_.data(), numel()); }

  /// H x W view of one (batch, channel) plane.
  MatrixMap plane(Index n, Index c) {
    return MatrixMap(data_.data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }
  ConstMatrixMap plane(Index n, Index c) const {
    return ConstMatrixMap(data_.data() + offset(n, c, 0, 0), shape_.h, shape_.w);
  }

  /// C x (H*W) view of one batch item; the GEMM operand for channel mixing.
  MatrixMap channels(Index n) {
    return MatrixMap(data_.data() + offset(n, 0, 0, 0), shape_.c, shape_.plane_size());
  }
  ConstMatrixMap channels(Index n) const {
    return ConstMatrixMap(data_.data() + offset(n, 0, 0, 0), shape_.c, shape_.plane_size());
  }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static const Shape& checked(const Shape& s) {
    if (!s.valid()) throw DimensionError("tensor dims must all be >= 1, got " + s.str());
    return s;
  }

  Shape shape_;
  std::vector<T> data_;
};

/// Per-output-location fractional (row, col) source coordinates in pixel
/// units, origin at the centre of pixel (0, 0). Layout (N, groups, H, W, 2).
template <class T>
class SamplingGrid {
 public:
  SamplingGrid(Index n, Index groups, Index h, Index w)
      : n_(n), groups_(groups), h_(h), w_(w) {
    if (n < 1 || groups < 1 || h < 1 || w < 1) {
      throw DimensionError("sampling grid dims must all be >= 1");
    }
    coords_.assign(static_cast<std::size_t>(n * groups * h * w * 2), T(0));
  }

  /// Identity grid: output (i, j) reads source (i, j).
  static SamplingGrid identity(Index n, Index groups, Index h, Index w) {
    SamplingGrid g(n, groups, h, w);
    for (Index b = 0; b < n; ++b)
      for (Index k = 0; k < groups; ++k)
        for (Index i = 0; i < h; ++i)
          for (Index j = 0; j < w; ++j) {
            g.row(b, k, i, j) = static_cast<T>(i);
            g.col(b, k, i, j) = static_cast<T>(j);
          }
    return g;
  }

  Index batch() const { return n_; }
  Index groups() const { return groups_; }
  Index height() const { return h_; }
  Index width() const { return w_; }
  static constexpr Index last_dim() { return 2; }

  T& row(Index n, Index g, Index i, Index j) { return coords_[base(n, g, i, j)]; }
  T& col(Index n, Index g, Index i, Index j) { return coords_[base(n, g, i, j) + 1]; }
  T row(Index n, Index g, Index i, Index j) const { return coords_[base(n, g, i, j)]; }
  T col(Index n, Index g, Index i, Index j) const { return coords_[base(n, g, i, j) + 1]; }

  std::span<const T> values() const { return coords_; }

 private:
  std::size_t base(Index n, Index g, Index i, Index j) const {
    return static_cast<std::size_t>((((n * groups_ + g) * h_ + i) * w_ + j) * 2);
  }

  Index n_, groups_, h_, w_;
  std::vector<T> coords_;
};

template <class T>
void require_finite(const Tensor<T>& t, std::string_view op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite value in input");
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, std::string_view op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
  }
}

template <class T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  if (a.numel() == 0) return T(0);
  return (a.array() - b.array()).abs().maxCoeff();
}

}  // namespace sep
