// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sep/parallel.hpp"

namespace sep {

namespace {

template <class T>
using RowMatrix = typename Tensor<T>::RowMatrix;

Index conv_out_size(Index in, Index k, Index stride, Index padding) {
  return (in + 2 * padding - k) / stride + 1;
}

template <class T>
void check_conv_args(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                     Index stride, Index padding) {
  const Shape& x = input.shape();
  const Shape& w = weight.shape();
  if (stride < 1) throw ArgumentError("conv2d: stride must be >= 1");
  if (padding < 0) throw ArgumentError("conv2d: padding must be >= 0");
  if (w.h != w.w) throw DimensionError("conv2d: kernel must be square, got " + w.str());
  if (w.c != x.c) {
    throw DimensionError("conv2d: weight expects " + std::to_string(w.c) +
                         " input channels, input has " + std::to_string(x.c));
  }
  if (x.h + 2 * padding < w.h || x.w + 2 * padding < w.w) {
    throw DimensionError("conv2d: kernel larger than padded input");
  }
  if (bias != nullptr && bias->shape() != Shape{1, w.n, 1, 1}) {
    throw DimensionError("conv2d: bias must be (1," + std::to_string(w.n) + ",1,1), got " +
                         bias->shape().str());
  }
  require_finite(input, "conv2d");
  if (!weight.all_finite() || (bias != nullptr && !bias->all_finite())) {
    throw NumericError("conv2d: non-finite weights");
  }
}

// Unfolds batch item n into a (C_in*k*k) x (H_out*W_out) patch matrix.
template <class T>
RowMatrix<T> im2col(const Tensor<T>& x, Index n, Index k, Index stride, Index padding,
                    Index out_h, Index out_w) {
  const Shape& s = x.shape();
  RowMatrix<T> col = RowMatrix<T>::Zero(s.c * k * k, out_h * out_w);
  for (Index c = 0; c < s.c; ++c) {
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        const Index row = (c * k + ki) * k + kj;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * stride - padding + ki;
          if (ih < 0 || ih >= s.h) continue;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * stride - padding + kj;
            if (iw < 0 || iw >= s.w) continue;
            col(row, oh * out_w + ow) = x(n, c, ih, iw);
          }
        }
      }
    }
  }
  return col;
}

template <class T>
void col2im_add(const RowMatrix<T>& col, Tensor<T>& dx, Index n, Index k, Index stride,
                Index padding, Index out_h, Index out_w) {
  const Shape& s = dx.shape();
  for (Index c = 0; c < s.c; ++c) {
    for (Index ki = 0; ki < k; ++ki) {
      for (Index kj = 0; kj < k; ++kj) {
        const Index row = (c * k + ki) * k + kj;
        for (Index oh = 0; oh < out_h; ++oh) {
          const Index ih = oh * stride - padding + ki;
          if (ih < 0 || ih >= s.h) continue;
          for (Index ow = 0; ow < out_w; ++ow) {
            const Index iw = ow * stride - padding + kj;
            if (iw < 0 || iw >= s.w) continue;
            dx(n, c, ih, iw) += col(row, oh * out_w + ow);
          }
        }
      }
    }
  }
}

template <class T>
typename Tensor<T>::ConstMatrixMap weight_matrix(const Tensor<T>& w) {
  const Shape& s = w.shape();
  return typename Tensor<T>::ConstMatrixMap(w.data(), s.n, s.c * s.h * s.w);
}

template <class T>
void check_depthwise(const Tensor<T>& input, const Tensor<T>& weight, Index padding) {
  const Shape& x = input.shape();
  const Shape& w = weight.shape();
  if (w.n != x.c || w.c != 1) {
    throw DimensionError("depthwise_conv2d: weight must be (" + std::to_string(x.c) +
                         ",1,k,k), got " + w.str());
  }
  if (w.h != w.w || w.h % 2 == 0) {
    throw DimensionError("depthwise_conv2d: kernel must be square and odd, got " + w.str());
  }
  if (padding != w.h / 2) {
    throw ArgumentError("depthwise_conv2d: padding must be k/2 = " + std::to_string(w.h / 2));
  }
  require_finite(input, "depthwise_conv2d");
  if (!weight.all_finite()) throw NumericError("depthwise_conv2d: non-finite weights");
}

// Border-clamped source position along one axis.
template <class T>
struct AxisSample {
  Index lo;
  Index hi;
  T frac;
  bool clamped;
};

template <class T>
AxisSample<T> axis_sample(T coord, Index size) {
  const T upper = static_cast<T>(size - 1);
  const bool clamped = coord < T(0) || coord > upper;
  const T c = std::clamp(coord, T(0), upper);
  const Index lo = std::min(static_cast<Index>(std::floor(c)), size - 1);
  const Index hi = std::min(lo + 1, size - 1);
  return {lo, hi, c - static_cast<T>(lo), clamped};
}

template <class T>
void check_sample_args(const Tensor<T>& input, const SamplingGrid<T>& grid) {
  const Shape& s = input.shape();
  if (grid.batch() != s.n) {
    throw DimensionError("bilinear_sample: grid batch " + std::to_string(grid.batch()) +
                         " != input batch " + std::to_string(s.n));
  }
  if (s.c % grid.groups() != 0) {
    throw DimensionError("bilinear_sample: " + std::to_string(s.c) +
                         " channels not divisible into " + std::to_string(grid.groups()) +
                         " groups");
  }
  require_finite(input, "bilinear_sample");
  for (T v : grid.values()) {
    if (!std::isfinite(v)) throw NumericError("bilinear_sample: non-finite coordinate");
  }
}

template <class T, class Op>
Tensor<T> broadcast_binary(const Tensor<T>& a, const Tensor<T>& b, Op op) {
  const Shape out = broadcast_shape(a.shape(), b.shape());
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  Tensor<T> y(out);
  for (Index n = 0; n < out.n; ++n)
    for (Index c = 0; c < out.c; ++c)
      for (Index h = 0; h < out.h; ++h)
        for (Index w = 0; w < out.w; ++w) {
          const T va = a(sa.n == 1 ? 0 : n, sa.c == 1 ? 0 : c, sa.h == 1 ? 0 : h, sa.w == 1 ? 0 : w);
          const T vb = b(sb.n == 1 ? 0 : n, sb.c == 1 ? 0 : c, sb.h == 1 ? 0 : h, sb.w == 1 ? 0 : w);
          y(n, c, h, w) = op(va, vb);
        }
  return y;
}

template <class T, class F>
Tensor<T> map_unary(const Tensor<T>& x, const char* name, F f) {
  require_finite(x, name);
  Tensor<T> y(x.shape());
  y.array() = x.array().unaryExpr(f);
  return y;
}

template <class T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

}  // namespace

// ---------------------------------------------------------------- convolution

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                 Index stride, Index padding) {
  check_conv_args(input, weight, bias, stride, padding);
  const Shape& x = input.shape();
  const Index k = weight.shape().h;
  const Index c_out = weight.shape().n;
  const Index out_h = conv_out_size(x.h, k, stride, padding);
  const Index out_w = conv_out_size(x.w, k, stride, padding);
  Tensor<T> y(Shape{x.n, c_out, out_h, out_w});
  const auto wm = weight_matrix(weight);
  const bool pointwise = k == 1 && stride == 1 && padding == 0;

  parallel_for(x.n, [&](Index n) {
    auto out = y.channels(n);
    if (pointwise) {
      out.noalias() = wm * input.channels(n);
    } else {
      out.noalias() = wm * im2col(input, n, k, stride, padding, out_h, out_w);
    }
    if (bias != nullptr) {
      for (Index o = 0; o < c_out; ++o) out.row(o).array() += (*bias)[o];
    }
  });
  return y;
}

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, bool has_bias,
                               Index stride, Index padding, const Tensor<T>& grad_out) {
  const Shape& x = input.shape();
  const Shape& ws = weight.shape();
  const Index k = ws.h;
  const Index out_h = conv_out_size(x.h, k, stride, padding);
  const Index out_w = conv_out_size(x.w, k, stride, padding);
  if (grad_out.shape() != Shape{x.n, ws.n, out_h, out_w}) {
    throw DimensionError("conv2d_backward: grad shape " + grad_out.shape().str());
  }
  Conv2dGrads<T> g{Tensor<T>(x), Tensor<T>(ws), std::nullopt};
  auto dw = typename Tensor<T>::MatrixMap(g.weight.data(), ws.n, ws.c * k * k);
  const auto wm = weight_matrix(weight);
  const bool pointwise = k == 1 && stride == 1 && padding == 0;

  for (Index n = 0; n < x.n; ++n) {
    const auto dy = grad_out.channels(n);
    if (pointwise) {
      dw.noalias() += dy * input.channels(n).transpose();
      g.input.channels(n).noalias() = wm.transpose() * dy;
    } else {
      const RowMatrix<T> col = im2col(input, n, k, stride, padding, out_h, out_w);
      dw.noalias() += dy * col.transpose();
      const RowMatrix<T> dcol = wm.transpose() * dy;
      col2im_add(dcol, g.input, n, k, stride, padding, out_h, out_w);
    }
  }
  if (has_bias) {
    Tensor<T> db(Shape{1, ws.n, 1, 1});
    for (Index n = 0; n < x.n; ++n) {
      const auto dy = grad_out.channels(n);
      for (Index o = 0; o < ws.n; ++o) db[o] += dy.row(o).sum();
    }
    g.bias = std::move(db);
  }
  return g;
}

template <class T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight, Index padding) {
  check_depthwise(input, weight, padding);
  const Shape& s = input.shape();
  const Index k = weight.shape().h;
  Tensor<T> y(s);
  parallel_for(s.n * s.c, [&](Index nc) {
    const Index n = nc / s.c;
    const Index c = nc % s.c;
    for (Index h = 0; h < s.h; ++h) {
      for (Index w = 0; w < s.w; ++w) {
        T acc = T(0);
        for (Index ki = 0; ki < k; ++ki) {
          const Index ih = h - padding + ki;
          if (ih < 0 || ih >= s.h) continue;
          for (Index kj = 0; kj < k; ++kj) {
            const Index iw = w - padding + kj;
            if (iw < 0 || iw >= s.w) continue;
            acc += weight(c, 0, ki, kj) * input(n, c, ih, iw);
          }
        }
        y(n, c, h, w) = acc;
      }
    }
  });
  return y;
}

template <class T>
DepthwiseGrads<T> depthwise_conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                                            Index padding, const Tensor<T>& grad_out) {
  require_same_shape(input, grad_out, "depthwise_conv2d_backward");
  const Shape& s = input.shape();
  const Index k = weight.shape().h;
  DepthwiseGrads<T> g{Tensor<T>(s), Tensor<T>(weight.shape())};
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c)
      for (Index h = 0; h < s.h; ++h)
        for (Index w = 0; w < s.w; ++w) {
          const T dy = grad_out(n, c, h, w);
          for (Index ki = 0; ki < k; ++ki) {
            const Index ih = h - padding + ki;
            if (ih < 0 || ih >= s.h) continue;
            for (Index kj = 0; kj < k; ++kj) {
              const Index iw = w - padding + kj;
              if (iw < 0 || iw >= s.w) continue;
              g.weight(c, 0, ki, kj) += dy * input(n, c, ih, iw);
              g.input(n, c, ih, iw) += dy * weight(c, 0, ki, kj);
            }
          }
        }
  return g;
}

// ---------------------------------------------------------------- sampling

template <class T>
Tensor<T> bilinear_sample(const Tensor<T>& input, const SamplingGrid<T>& grid) {
  check_sample_args(input, grid);
  const Shape& s = input.shape();
  const Index per_group = s.c / grid.groups();
  Tensor<T> y(Shape{s.n, s.c, grid.height(), grid.width()});
  parallel_for(s.n * s.c, [&](Index nc) {
    const Index n = nc / s.c;
    const Index c = nc % s.c;
    const Index g = c / per_group;
    for (Index i = 0; i < grid.height(); ++i) {
      for (Index j = 0; j < grid.width(); ++j) {
        const auto r = axis_sample(grid.row(n, g, i, j), s.h);
        const auto q = axis_sample(grid.col(n, g, i, j), s.w);
        // lerp keeps constants and lattice points exact.
        const T top = std::lerp(input(n, c, r.lo, q.lo), input(n, c, r.lo, q.hi), q.frac);
        const T bottom = std::lerp(input(n, c, r.hi, q.lo), input(n, c, r.hi, q.hi), q.frac);
        y(n, c, i, j) = std::lerp(top, bottom, r.frac);
      }
    }
  });
  return y;
}

template <class T>
BilinearGrads<T> bilinear_sample_backward(const Tensor<T>& input, const SamplingGrid<T>& grid,
                                          const Tensor<T>& grad_out) {
  const Shape& s = input.shape();
  if (grad_out.shape() != Shape{s.n, s.c, grid.height(), grid.width()}) {
    throw DimensionError("bilinear_sample_backward: grad shape " + grad_out.shape().str());
  }
  const Index per_group = s.c / grid.groups();
  BilinearGrads<T> g{Tensor<T>(s),
                     SamplingGrid<T>(grid.batch(), grid.groups(), grid.height(), grid.width())};
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) {
      const Index k = c / per_group;
      for (Index i = 0; i < grid.height(); ++i)
        for (Index j = 0; j < grid.width(); ++j) {
          const T dy = grad_out(n, c, i, j);
          const auto r = axis_sample(grid.row(n, k, i, j), s.h);
          const auto q = axis_sample(grid.col(n, k, i, j), s.w);
          const T a = input(n, c, r.lo, q.lo);
          const T b = input(n, c, r.lo, q.hi);
          const T cc = input(n, c, r.hi, q.lo);
          const T d = input(n, c, r.hi, q.hi);
          const T fr = r.frac;
          const T fc = q.frac;
          g.input(n, c, r.lo, q.lo) += dy * (T(1) - fr) * (T(1) - fc);
          g.input(n, c, r.lo, q.hi) += dy * (T(1) - fr) * fc;
          g.input(n, c, r.hi, q.lo) += dy * fr * (T(1) - fc);
          g.input(n, c, r.hi, q.hi) += dy * fr * fc;
          if (!r.clamped) {
            g.grid.row(n, k, i, j) += dy * ((T(1) - fc) * (cc - a) + fc * (d - b));
          }
          if (!q.clamped) {
            g.grid.col(n, k, i, j) += dy * ((T(1) - fr) * (b - a) + fr * (d - cc));
          }
        }
    }
  return g;
}

template <class T>
Tensor<T> grid_to_tensor(const SamplingGrid<T>& grid) {
  Tensor<T> t(Shape{grid.batch(), 2 * grid.groups(), grid.height(), grid.width()});
  for (Index n = 0; n < grid.batch(); ++n)
    for (Index g = 0; g < grid.groups(); ++g)
      for (Index i = 0; i < grid.height(); ++i)
        for (Index j = 0; j < grid.width(); ++j) {
          t(n, 2 * g, i, j) = grid.row(n, g, i, j);
          t(n, 2 * g + 1, i, j) = grid.col(n, g, i, j);
        }
  return t;
}

template <class T>
SamplingGrid<T> grid_from_tensor(const Tensor<T>& coords) {
  const Shape& s = coords.shape();
  if (s.c % 2 != 0) {
    throw DimensionError("grid tensor needs an even channel count (row, col pairs), got " +
                         s.str());
  }
  SamplingGrid<T> grid(s.n, s.c / 2, s.h, s.w);
  for (Index n = 0; n < s.n; ++n)
    for (Index g = 0; g < s.c / 2; ++g)
      for (Index i = 0; i < s.h; ++i)
        for (Index j = 0; j < s.w; ++j) {
          grid.row(n, g, i, j) = coords(n, 2 * g, i, j);
          grid.col(n, g, i, j) = coords(n, 2 * g + 1, i, j);
        }
  return grid;
}

// ---------------------------------------------------------------- activations

template <class T>
Tensor<T> gelu(const Tensor<T>& x) {
  return map_unary(x, "gelu", [](T v) {
    return T(0.5) * v * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
  });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return map_unary(x, "sigmoid", [](T v) { return sigmoid_scalar(v); });
}

template <class T>
Tensor<T> silu(const Tensor<T>& x) {
  return map_unary(x, "silu", [](T v) { return v * sigmoid_scalar(v); });
}

template <class T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x, grad_out, "gelu_backward");
  const T inv_sqrt_2pi = std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
  Tensor<T> g(x.shape());
  g.array() = x.array().unaryExpr([&](T v) {
    const T cdf = T(0.5) * (T(1) + std::erf(v / std::numbers::sqrt2_v<T>));
    return cdf + v * inv_sqrt_2pi * std::exp(T(-0.5) * v * v);
  }) * grad_out.array();
  return g;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x, grad_out, "sigmoid_backward");
  Tensor<T> g(x.shape());
  g.array() = x.array().unaryExpr([](T v) {
    const T s = sigmoid_scalar(v);
    return s * (T(1) - s);
  }) * grad_out.array();
  return g;
}

template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  require_same_shape(x, grad_out, "silu_backward");
  Tensor<T> g(x.shape());
  g.array() = x.array().unaryExpr([](T v) {
    const T s = sigmoid_scalar(v);
    return s + v * s * (T(1) - s);
  }) * grad_out.array();
  return g;
}

// ---------------------------------------------------------------- channels

template <class T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, const std::vector<Index>& sizes) {
  const Shape& s = x.shape();
  Index total = 0;
  for (Index sz : sizes) {
    if (sz < 1) throw DimensionError("split_channels: every part needs >= 1 channel");
    total += sz;
  }
  if (total != s.c) {
    throw DimensionError("split_channels: sizes sum to " + std::to_string(total) + ", tensor has " +
                         std::to_string(s.c) + " channels");
  }
  require_finite(x, "split_channels");
  std::vector<Tensor<T>> parts;
  parts.reserve(sizes.size());
  Index first = 0;
  for (Index sz : sizes) {
    Tensor<T> part(Shape{s.n, sz, s.h, s.w});
    for (Index n = 0; n < s.n; ++n) {
      part.channels(n) = x.channels(n).middleRows(first, sz);
    }
    parts.push_back(std::move(part));
    first += sz;
  }
  return parts;
}

template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: nothing to concatenate");
  Shape out = parts.front().shape();
  out.c = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.n != out.n || s.h != out.h || s.w != out.w) {
      throw DimensionError("concat_channels: incompatible part " + s.str() + " vs " +
                           parts.front().shape().str());
    }
    require_finite(p, "concat_channels");
    out.c += s.c;
  }
  Tensor<T> y(out);
  Index first = 0;
  for (const auto& p : parts) {
    for (Index n = 0; n < out.n; ++n) {
      y.channels(n).middleRows(first, p.shape().c) = p.channels(n);
    }
    first += p.shape().c;
  }
  return y;
}

// ---------------------------------------------------------------- broadcasting

Shape broadcast_shape(const Shape& a, const Shape& b) {
  auto dim = [&](Index x, Index y, const char* name) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw DimensionError(std::string("cannot broadcast ") + a.str() + " with " + b.str() +
                         " along " + name);
  };
  return Shape{dim(a.n, b.n, "N"), dim(a.c, b.c, "C"), dim(a.h, b.h, "H"), dim(a.w, b.w, "W")};
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_finite(a, "add");
  require_finite(b, "add");
  if (a.shape() == b.shape()) {
    Tensor<T> y(a.shape());
    y.array() = a.array() + b.array();
    return y;
  }
  return broadcast_binary(a, b, [](T u, T v) { return u + v; });
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_finite(a, "mul");
  require_finite(b, "mul");
  if (a.shape() == b.shape()) {
    Tensor<T> y(a.shape());
    y.array() = a.array() * b.array();
    return y;
  }
  return broadcast_binary(a, b, [](T u, T v) { return u * v; });
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  require_finite(a, "scale");
  Tensor<T> y(a.shape());
  y.array() = a.array() * s;
  return y;
}

template <class T>
Tensor<T> reduce_to(const Tensor<T>& grad, const Shape& target) {
  const Shape& g = grad.shape();
  if (g == target) return grad;
  if (broadcast_shape(target, g) != g) {
    throw DimensionError("reduce_to: " + g.str() + " does not broadcast from " + target.str());
  }
  Tensor<T> out(target);
  for (Index n = 0; n < g.n; ++n)
    for (Index c = 0; c < g.c; ++c)
      for (Index h = 0; h < g.h; ++h)
        for (Index w = 0; w < g.w; ++w) {
          out(target.n == 1 ? 0 : n, target.c == 1 ? 0 : c, target.h == 1 ? 0 : h,
              target.w == 1 ? 0 : w) += grad(n, c, h, w);
        }
  return out;
}

// ---------------------------------------------------------------- pooling

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_finite(x, "global_avg_pool");
  const Shape& s = x.shape();
  Tensor<T> y(Shape{s.n, s.c, 1, 1});
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) y(n, c, 0, 0) = x.plane(n, c).mean();
  return y;
}

template <class T>
Tensor<T> global_max_pool(const Tensor<T>& x) {
  require_finite(x, "global_max_pool");
  const Shape& s = x.shape();
  Tensor<T> y(Shape{s.n, s.c, 1, 1});
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) y(n, c, 0, 0) = x.plane(n, c).maxCoeff();
  return y;
}

template <class T>
Tensor<T> channel_mean(const Tensor<T>& x) {
  require_finite(x, "channel_mean");
  const Shape& s = x.shape();
  Tensor<T> y(Shape{s.n, 1, s.h, s.w});
  for (Index n = 0; n < s.n; ++n) y.channels(n) = x.channels(n).colwise().mean();
  return y;
}

template <class T>
Tensor<T> channel_max(const Tensor<T>& x) {
  require_finite(x, "channel_max");
  const Shape& s = x.shape();
  Tensor<T> y(Shape{s.n, 1, s.h, s.w});
  for (Index n = 0; n < s.n; ++n) y.channels(n) = x.channels(n).colwise().maxCoeff();
  return y;
}

template <class T>
Tensor<T> global_max_pool_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  const Shape& s = x.shape();
  Tensor<T> g(s);
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < s.c; ++c) {
      Index r = 0;
      Index q = 0;
      x.plane(n, c).maxCoeff(&r, &q);
      g(n, c, r, q) += grad_out(n, c, 0, 0);
    }
  return g;
}

template <class T>
Tensor<T> channel_max_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  const Shape& s = x.shape();
  Tensor<T> g(s);
  for (Index n = 0; n < s.n; ++n)
    for (Index h = 0; h < s.h; ++h)
      for (Index w = 0; w < s.w; ++w) {
        Index best = 0;
        for (Index c = 1; c < s.c; ++c) {
          if (x(n, c, h, w) > x(n, best, h, w)) best = c;
        }
        g(n, best, h, w) += grad_out(n, 0, h, w);
      }
  return g;
}

// ---------------------------------------------------------------- reshuffles

template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, Index s) {
  const Shape& in = x.shape();
  if (s < 1 || in.c % (s * s) != 0) {
    throw DimensionError("pixel_shuffle: channels " + std::to_string(in.c) +
                         " not divisible by scale^2 = " + std::to_string(s * s));
  }
  require_finite(x, "pixel_shuffle");
  const Index c_out = in.c / (s * s);
  Tensor<T> y(Shape{in.n, c_out, in.h * s, in.w * s});
  for (Index n = 0; n < in.n; ++n)
    for (Index c = 0; c < c_out; ++c)
      for (Index a = 0; a < s; ++a)
        for (Index b = 0; b < s; ++b)
          for (Index h = 0; h < in.h; ++h)
            for (Index w = 0; w < in.w; ++w) {
              y(n, c, h * s + a, w * s + b) = x(n, (c * s + a) * s + b, h, w);
            }
  return y;
}

template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, Index s) {
  const Shape& in = x.shape();
  if (s < 1 || in.h % s != 0 || in.w % s != 0) {
    throw DimensionError("pixel_unshuffle: spatial size " + in.str() + " not divisible by " +
                         std::to_string(s));
  }
  const Index h_out = in.h / s;
  const Index w_out = in.w / s;
  Tensor<T> y(Shape{in.n, in.c * s * s, h_out, w_out});
  for (Index n = 0; n < in.n; ++n)
    for (Index c = 0; c < in.c; ++c)
      for (Index a = 0; a < s; ++a)
        for (Index b = 0; b < s; ++b)
          for (Index h = 0; h < h_out; ++h)
            for (Index w = 0; w < w_out; ++w) {
              y(n, (c * s + a) * s + b, h, w) = x(n, c, h * s + a, w * s + b);
            }
  return y;
}

// ---------------------------------------------------------------- instantiation

#define SEP_INSTANTIATE_OPS(T)                                                                 \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, Index, Index); \
  template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, bool, Index,       \
                                          Index, const Tensor<T>&);                              \
  template Tensor<T> depthwise_conv2d(const Tensor<T>&, const Tensor<T>&, Index);                \
  template DepthwiseGrads<T> depthwise_conv2d_backward(const Tensor<T>&, const Tensor<T>&,       \
                                                       Index, const Tensor<T>&);                 \
  template Tensor<T> bilinear_sample(const Tensor<T>&, const SamplingGrid<T>&);                  \
  template BilinearGrads<T> bilinear_sample_backward(const Tensor<T>&, const SamplingGrid<T>&,   \
                                                     const Tensor<T>&);                          \
  template Tensor<T> grid_to_tensor(const SamplingGrid<T>&);                                     \
  template SamplingGrid<T> grid_from_tensor(const Tensor<T>&);                                   \
  template Tensor<T> gelu(const Tensor<T>&);                                                     \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> silu(const Tensor<T>&);                                                     \
  template Tensor<T> gelu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> silu_backward(const Tensor<T>&, const Tensor<T>&);                          \
  template std::vector<Tensor<T>> split_channels(const Tensor<T>&, const std::vector<Index>&);    \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> reduce_to(const Tensor<T>&, const Shape&);                                  \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                          \
  template Tensor<T> global_max_pool(const Tensor<T>&);                                          \
  template Tensor<T> channel_mean(const Tensor<T>&);                                             \
  template Tensor<T> channel_max(const Tensor<T>&);                                              \
  template Tensor<T> global_max_pool_backward(const Tensor<T>&, const Tensor<T>&);               \
  template Tensor<T> channel_max_backward(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, Index);                                     \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, Index);

SEP_INSTANTIATE_OPS(float)
SEP_INSTANTIATE_OPS(double)

#undef SEP_INSTANTIATE_OPS

}  // namespace sep
