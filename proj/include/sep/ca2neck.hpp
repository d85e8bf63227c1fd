// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Content-aware alignment neck: deformable point-sampling downsampling
// (LDConv), dynamic point-sampling upsampling (DySample), and a PAN-style
// three-level pyramid built from them with MS-GRB fusion blocks.

#pragma once

#include <array>
#include <utility>
#include <vector>

#include "sep/autodiff.hpp"
#include "sep/init.hpp"
#include "sep/msgrb.hpp"

namespace sep {

// ---------------------------------------------------------------- LDConv

/// N zero-mean (row, col) base offsets: the first N cells of a ceil(sqrt(N))
/// square grid in row-major order, minus their centroid.
std::vector<std::pair<double, double>> ldconv_coords(Index n);

struct LdconvConfig {
  Index in_channels = 0;
  Index out_channels = 0;
  Index points = 5;
  Index stride = 1;
};

/// Parameter names:
///   offset.weight (2N, C_in, 3, 3), offset.bias (1, 2N, 1, 1)   zero when fresh
///   mix.weight    (C_out, N * C_in, 1, 1)                        input index p * C_in + c
/// Offset channel 2p is the row shift of point p and 2p + 1 its column shift.
template <class T>
ParamStore<T> ldconv_init(const LdconvConfig& cfg, Rng& rng, Init init = Init::Fresh);

template <class T>
void ldconv_validate(const LdconvConfig& cfg, const ParamStore<T>& params);

/// Mixing weights stored per output channel.
template <class T>
Index ldconv_weights_per_output(const ParamStore<T>& params);

/// Output spatial size along one axis.
inline Index ldconv_output_size(Index size, Index stride) { return (size + stride - 1) / stride; }

/// Sampling coordinates (N, 2 * points, H_out, W_out) for input x.
template <class T>
Var<T> ldconv_sampling(const Var<T>& x, const LdconvConfig& cfg, const ParamVars<T>& p);

template <class T>
Var<T> ldconv(const Var<T>& x, const LdconvConfig& cfg, const ParamVars<T>& p);

template <class T>
Tensor<T> ldconv_forward(const Tensor<T>& x, const LdconvConfig& cfg, const ParamStore<T>& params);

// ---------------------------------------------------------------- DySample

struct DysampleConfig {
  Index channels = 0;
  Index scale = 2;
  Index groups = 1;
  double scope = 0.25;

  Index offset_channels() const { return 2 * groups * scale * scale; }
};

/// Parameter names: offset.weight (2 g s^2, C, 1, 1), offset.bias (1, 2 g s^2, 1, 1),
/// both zero when fresh. Head channel (2 * group + axis) * s^2 + a * s + b
/// drives the sub-pixel output (a, b) of each source cell.
template <class T>
ParamStore<T> dysample_init(const DysampleConfig& cfg, Rng& rng, Init init = Init::Fresh);

template <class T>
void dysample_validate(const DysampleConfig& cfg, const ParamStore<T>& params);

/// Base grid (1, 2g, sH, sW): output (i, j) reads source ((i + 0.5) / s - 0.5, ...).
template <class T>
Tensor<T> dysample_base_grid(Index groups, Index scale, Index h, Index w);

/// Sampling coordinates (N, 2g, sH, sW) = base + scope * offsets.
template <class T>
Var<T> dysample_sampling(const Var<T>& x, const DysampleConfig& cfg, const ParamVars<T>& p);

template <class T>
Var<T> dysample(const Var<T>& x, const DysampleConfig& cfg, const ParamVars<T>& p);

template <class T>
Tensor<T> dysample_forward(const Tensor<T>& x, const DysampleConfig& cfg,
                           const ParamStore<T>& params);
template <class T>
Tensor<T> dysample_coords(const Tensor<T>& x, const DysampleConfig& cfg,
                          const ParamStore<T>& params);

// ---------------------------------------------------------------- neck

struct NeckConfig {
  /// Channels of the stride 8 / 16 / 32 levels.
  std::array<Index, 3> channels{};
  Index points = 5;
  Index groups = 1;
  double scope = 0.25;
  std::vector<Index> kernels{3, 5, 7};
};

/// Top-down:  T4 = fuse4(merge4[P4, up(P5)]),  T3 = fuse3(merge3[P3, up(T4)])
/// Bottom-up: O4 = fuse(merge[T4, down(T3)]),  O5 = fuse(merge[P5, down(O4)])
/// Returns {T3, O4, O5}. Each merge is a 1x1 conv that starts as the identity
/// on the lateral input and zero on the resampled one, so together with the
/// zero-initialized offset heads and fusion blocks a fresh neck is an identity.
///
/// Parameter prefixes: td.up5, td.merge4, td.fuse4, td.up4, td.merge3,
/// td.fuse3, bu.down3, bu.merge4, bu.fuse4, bu.down4, bu.merge5, bu.fuse5.
template <class T>
ParamStore<T> neck_init(const NeckConfig& cfg, Rng& rng, Init init = Init::Fresh);

template <class T>
void neck_validate(const NeckConfig& cfg, const ParamStore<T>& params);

/// Throws DimensionError unless the levels match the configured channels and
/// each level is exactly twice the next one in height and width.
void neck_check_levels(const NeckConfig& cfg, const std::array<Shape, 3>& levels);

template <class T>
std::vector<Var<T>> ca2neck(const std::vector<Var<T>>& levels, const NeckConfig& cfg,
                            const ParamVars<T>& p);

template <class T>
std::vector<Tensor<T>> ca2neck_forward(const std::vector<Tensor<T>>& levels,
                                       const NeckConfig& cfg, const ParamStore<T>& params);

/// Sub-module configs used by the neck.
LdconvConfig neck_down_config(const NeckConfig& cfg, int level);
DysampleConfig neck_up_config(const NeckConfig& cfg, int level);
MsgrbConfig neck_fuse_config(const NeckConfig& cfg, int level);

}  // namespace sep
