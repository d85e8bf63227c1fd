// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Multi-scale gated refinement block:
//
//   Y = X + shrink( msdw(gelu(X_k)) * sigmoid(V_k) ),   [X_k, V_k] = split(expand(X))
//
// where msdw sums shape-preserving depthwise convolutions at several odd
// kernel sizes. The shrink 1x1 conv has no bias and starts at zero, so a fresh
// block is an exact identity.

#pragma once

#include <vector>

#include "sep/autodiff.hpp"
#include "sep/init.hpp"

namespace sep {

struct MsgrbConfig {
  Index channels = 0;
  std::vector<Index> kernels{3, 5, 7};

  /// Width of each gated half; expand produces twice this.
  Index hidden() const { return channels; }
};

/// Parameter names: expand.weight (2H, C, 1, 1), expand.bias (1, 2H, 1, 1),
/// dw{k}.weight (H, 1, k, k) per kernel size, shrink.weight (C, H, 1, 1).
template <class T>
ParamStore<T> msgrb_init(const MsgrbConfig& cfg, Rng& rng, Init init = Init::Fresh);

/// Throws DimensionError unless `params` matches `cfg`.
template <class T>
void msgrb_validate(const MsgrbConfig& cfg, const ParamStore<T>& params);

template <class T>
Tensor<T> msdwconv(const Tensor<T>& x, const std::vector<Tensor<T>>& kernels);
template <class T>
Var<T> msdwconv(const Var<T>& x, const std::vector<Var<T>>& kernels);

template <class T>
Var<T> ms_gu(const Var<T>& x, const MsgrbConfig& cfg, const ParamVars<T>& p);
template <class T>
Var<T> msgrb(const Var<T>& x, const MsgrbConfig& cfg, const ParamVars<T>& p);

template <class T>
Tensor<T> ms_gu_forward(const Tensor<T>& x, const MsgrbConfig& cfg, const ParamStore<T>& params);
template <class T>
Tensor<T> msgrb_forward(const Tensor<T>& x, const MsgrbConfig& cfg, const ParamStore<T>& params);

}  // namespace sep
