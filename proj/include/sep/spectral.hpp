// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// 2D discrete Fourier transform pair and learnable complex modulation.
//
// Convention: unnormalized forward transform
//   F(u, v) = sum_{x, y} X(x, y) exp(-j 2 pi (u x / H + v y / W))
// and a 1/(H W) scaled inverse. Each (batch, channel) plane is transformed
// independently.

#pragma once

#include <vector>

#include "sep/tensor.hpp"

namespace sep {

template <class T>
struct ComplexTensor {
  Tensor<T> re;
  Tensor<T> im;

  ComplexTensor() = default;
  ComplexTensor(Tensor<T> real, Tensor<T> imag) : re(std::move(real)), im(std::move(imag)) {
    require_same_shape(re, im, "ComplexTensor");
  }
  explicit ComplexTensor(const Shape& s) : re(s), im(s) {}

  const Shape& shape() const { return re.shape(); }
};

/// Per-branch learnable spectrum weights, shape (1, C, H, W), shared across the
/// batch. Fresh weights are 1 + 0j so the branch starts as an identity map.
template <class T>
struct ComplexWeights {
  Tensor<T> re;
  Tensor<T> im;

  static ComplexWeights identity(Index channels, Index height, Index width) {
    const Shape s{1, channels, height, width};
    return {Tensor<T>::ones(s), Tensor<T>::zeros(s)};
  }
  const Shape& shape() const { return re.shape(); }
};

enum class FftPath {
  Auto,   // radix-2 when H and W are both powers of two, naive DFT otherwise
  Fast,   // radix-2 only; throws if a size is not a power of two
  Naive,  // O(n^2) per line, any size
};

constexpr bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

template <class T>
ComplexTensor<T> fft2(const Tensor<T>& x, FftPath path = FftPath::Auto);

/// Forward transform of a complex field (same sign convention).
template <class T>
ComplexTensor<T> fft2(const ComplexTensor<T>& x, FftPath path = FftPath::Auto);

/// Full complex inverse with 1/(H W) normalization.
template <class T>
ComplexTensor<T> ifft2_complex(const ComplexTensor<T>& s, FftPath path = FftPath::Auto);

/// Real part of the inverse transform. The discarded imaginary part's largest
/// magnitude is written to `imag_residue` when non-null.
template <class T>
Tensor<T> ifft2(const ComplexTensor<T>& s, T* imag_residue = nullptr,
                FftPath path = FftPath::Auto);

/// Elementwise complex product s (N, C, H, W) * w (1, C, H, W).
template <class T>
ComplexTensor<T> modulate(const ComplexTensor<T>& s, const ComplexWeights<T>& w);

template <class T>
struct ModulateGrads {
  ComplexTensor<T> spectrum;
  ComplexWeights<T> weights;
};

/// Adjoint of modulate: d/ds = g * conj(w), d/dw = sum over batch of g * conj(s).
template <class T>
ModulateGrads<T> modulate_backward(const ComplexTensor<T>& s, const ComplexWeights<T>& w,
                                   const ComplexTensor<T>& grad_out);

/// ifft2(modulate(fft2(x), W_i)) for every branch i.
template <class T>
std::vector<Tensor<T>> multi_branch_enhance(const Tensor<T>& x,
                                            const std::vector<ComplexWeights<T>>& weights);

namespace testing {

/// Deliberate defects used to show that the property harness catches errors.
enum class Fault {
  None,
  ModulateSign,  // flips the sign of one cross term in the imaginary part of modulate
};

void inject_fault(Fault f);
Fault active_fault();

}  // namespace testing

}  // namespace sep
