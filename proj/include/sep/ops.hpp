// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Forward kernels and their hand-written adjoints. These are pure functions
// over Tensor values; the tape in autodiff.hpp wires them together.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "sep/tensor.hpp"

namespace sep {

// ---------------------------------------------------------------- convolution

/// Dense 2D convolution with zero padding.
/// weight is (C_out, C_in, k, k); bias, when given, is (1, C_out, 1, 1).
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>* bias,
                 Index stride, Index padding);

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, std::nullptr_t, Index stride,
                 Index padding) {
  return conv2d(input, weight, static_cast<const Tensor<T>*>(nullptr), stride, padding);
}

template <class T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weight;
  std::optional<Tensor<T>> bias;
};

template <class T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, bool has_bias,
                               Index stride, Index padding, const Tensor<T>& grad_out);

/// Shape-preserving depthwise convolution, stride 1. weight is (C, 1, k, k) with
/// k odd and padding == k / 2.
template <class T>
Tensor<T> depthwise_conv2d(const Tensor<T>& input, const Tensor<T>& weight, Index padding);

template <class T>
struct DepthwiseGrads {
  Tensor<T> input;
  Tensor<T> weight;
};

template <class T>
DepthwiseGrads<T> depthwise_conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                                            Index padding, const Tensor<T>& grad_out);

// ---------------------------------------------------------------- sampling

/// Bilinear interpolation at fractional (row, col) positions with border
/// clamping. Channels are split evenly across grid groups.
template <class T>
Tensor<T> bilinear_sample(const Tensor<T>& input, const SamplingGrid<T>& grid);

template <class T>
struct BilinearGrads {
  Tensor<T> input;
  SamplingGrid<T> grid;
};

/// Coordinate gradients are zero wherever the clamp is active.
template <class T>
BilinearGrads<T> bilinear_sample_backward(const Tensor<T>& input, const SamplingGrid<T>& grid,
                                          const Tensor<T>& grad_out);

/// Packs a grid as an (N, 2*groups, H, W) tensor: channel 2g is row, 2g+1 col.
template <class T>
Tensor<T> grid_to_tensor(const SamplingGrid<T>& grid);
template <class T>
SamplingGrid<T> grid_from_tensor(const Tensor<T>& coords);

// ---------------------------------------------------------------- activations

template <class T>
Tensor<T> gelu(const Tensor<T>& x);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <class T>
Tensor<T> silu(const Tensor<T>& x);

template <class T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& x, const Tensor<T>& grad_out);
template <class T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

// ---------------------------------------------------------------- channels

template <class T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x, const std::vector<Index>& sizes);
template <class T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

// ---------------------------------------------------------------- broadcasting

/// Result shape when broadcasting a against b: per dim equal, or one side 1.
Shape broadcast_shape(const Shape& a, const Shape& b);

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <class T>
Tensor<T> scale(const Tensor<T>& a, T s);

/// Sums a broadcast gradient back down to `target`.
template <class T>
Tensor<T> reduce_to(const Tensor<T>& grad, const Shape& target);

// ---------------------------------------------------------------- pooling

/// (N, C, H, W) -> (N, C, 1, 1)
template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
template <class T>
Tensor<T> global_max_pool(const Tensor<T>& x);
/// (N, C, H, W) -> (N, 1, H, W)
template <class T>
Tensor<T> channel_mean(const Tensor<T>& x);
template <class T>
Tensor<T> channel_max(const Tensor<T>& x);

template <class T>
Tensor<T> global_max_pool_backward(const Tensor<T>& x, const Tensor<T>& grad_out);
template <class T>
Tensor<T> channel_max_backward(const Tensor<T>& x, const Tensor<T>& grad_out);

// ---------------------------------------------------------------- reshuffles

/// (N, C*s*s, H, W) -> (N, C, H*s, W*s); input channel c*s*s + a*s + b lands at
/// output (c, h*s + a, w*s + b).
template <class T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, Index s);
template <class T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, Index s);

}  // namespace sep
