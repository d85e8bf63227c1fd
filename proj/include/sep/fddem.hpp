// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Frequency-domain detail enhancement.
//
//   spatial(x) = x + conv3x3_b(gelu(conv3x3_a(x)))
//   f          = conv1x1(concat_i ifft2(fft2(x) * W_i))
//   y          = spatial(x) + attention(f) * f
//
// attention() is a channel-then-spatial gate. Channel logits come from a
// shared bias-free MLP over the global average and max pools; spatial logits
// from a 7x7 conv over the channel mean/max maps of the channel-gated feature.
// The two logit fields are summed with broadcasting and squashed by one
// sigmoid, so all-zero gate weights give exactly 0.5 everywhere.
//
// conv3x3_b and the compression conv start at zero and the complex weights at
// 1 + 0j, which makes a freshly built module an exact identity.

#pragma once

#include "sep/autodiff.hpp"
#include "sep/init.hpp"
#include "sep/spectral.hpp"

namespace sep {

struct FddemConfig {
  Index channels = 0;
  Index height = 0;
  Index width = 0;
  Index branches = 3;
  Index reduction = 4;

  Index attention_hidden() const { return channels / reduction; }
};

/// Parameter names:
///   spatial.conv1.{weight,bias}, spatial.conv2.{weight,bias}   3x3, C -> C
///   freq.w{i}.re / freq.w{i}.im                                 (1, C, H, W)
///   compress.{weight,bias}                                      1x1, branches*C -> C
///   attn.fc1.weight (C/r, C, 1, 1), attn.fc2.weight (C, C/r, 1, 1)
///   attn.spatial.{weight,bias}                                  7x7, 2 -> 1
template <class T>
ParamStore<T> fddem_init(const FddemConfig& cfg, Rng& rng, Init init = Init::Fresh);

template <class T>
void fddem_validate(const FddemConfig& cfg, const ParamStore<T>& params);

/// Gate in (0, 1) with the shape of f. `p` is scoped to the "attn" prefix.
template <class T>
Var<T> dual_attention(const Var<T>& f, const ParamVars<T>& p);

template <class T>
Var<T> fddem(const Var<T>& x, const FddemConfig& cfg, const ParamVars<T>& p);

/// Plain-tensor entry points.
template <class T>
Tensor<T> dual_attention(const Tensor<T>& f, Index reduction, const ParamStore<T>& attn_params);
template <class T>
Tensor<T> fddem_forward(const Tensor<T>& x, const FddemConfig& cfg, const ParamStore<T>& params);

/// The branch weights stored in `params`, in branch order.
template <class T>
std::vector<ComplexWeights<T>> fddem_branch_weights(const FddemConfig& cfg,
                                                    const ParamStore<T>& params);

}  // namespace sep
