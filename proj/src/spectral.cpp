// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/spectral.hpp"

#include <atomic>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "sep/parallel.hpp"

namespace sep {

namespace testing {
namespace {
std::atomic<Fault> g_fault{Fault::None};
}
void inject_fault(Fault f) { g_fault.store(f); }
Fault active_fault() { return g_fault.load(); }
}  // namespace testing

namespace {

template <class T>
using Cx = std::complex<T>;

// Plain product; std::complex's operator* carries Annex G inf/nan recovery
// we do not need (inputs are checked finite up front).
template <class T>
inline Cx<T> mul(Cx<T> a, Cx<T> b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// exp(sign * 2 pi i k / n) for k in [0, count); angles are evaluated in double
// so f32 transforms get correctly rounded twiddles. Angles are folded into
// [0, pi/2] first, which makes the axis values exactly 0 / +-1 and keeps
// w[n - k] == conj(w[k]) bit-exact.
template <class T>
std::vector<Cx<T>> twiddles(Index n, Index count, double sign) {
  std::vector<Cx<T>> w(static_cast<std::size_t>(count));
  for (Index k = 0; k < count; ++k) {
    const bool mirrored = 2 * k > n;
    const Index m = mirrored ? n - k : k;  // angle 2 pi m / n in [0, pi]
    double c = 0.0;
    double s = 0.0;
    if (4 * m == n) {
      s = 1.0;
    } else if (2 * m == n) {
      c = -1.0;
    } else if (4 * m > n) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(n - 2 * m) / (2.0 * static_cast<double>(n));
      c = -std::cos(a);
      s = std::sin(a);
    } else {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
      c = std::cos(a);
      s = std::sin(a);
    }
    if (mirrored) s = -s;
    w[static_cast<std::size_t>(k)] = Cx<T>(static_cast<T>(c), static_cast<T>(sign * s));
  }
  return w;
}

// One line transform, reused across all lines of equal length.
template <class T>
class LineTransform {
 public:
  LineTransform(Index n, bool inverse, bool fast) : n_(n), fast_(fast) {
    const double sign = inverse ? 1.0 : -1.0;
    if (fast_) {
      if (!is_power_of_two(n)) {
        throw ArgumentError("fft2: radix-2 path needs power-of-two sizes, got " + std::to_string(n));
      }
      table_ = twiddles<T>(n, n / 2 > 0 ? n / 2 : 1, sign);
      quarter_sign_ = static_cast<T>(sign);
      // Twiddles of stage `len` laid out back to back: table_[k * n / len], k < len / 2.
      for (Index len = 8; len <= n; len <<= 1) {
        for (Index k = 0; k < len / 2; ++k) stage_table_.push_back(table_[static_cast<std::size_t>(k * (n / len))]);
      }
      reversed_.resize(static_cast<std::size_t>(n));
      Index bits = 0;
      while ((Index{1} << bits) < n) ++bits;
      for (Index i = 0; i < n; ++i) {
        Index r = 0;
        for (Index b = 0; b < bits; ++b) r |= ((i >> b) & 1) << (bits - 1 - b);
        reversed_[static_cast<std::size_t>(i)] = r;
      }
    } else {
      table_ = twiddles<T>(n, n, sign);
    }
    scratch_.resize(static_cast<std::size_t>(n));
  }

  // Transforms line[0], line[stride], ..., line[(n-1)*stride] in place.
  void apply(Cx<T>* line, Index stride) {
    if (fast_) {
      radix2(line, stride);
    } else {
      naive(line, stride);
    }
  }

 private:
  void naive(Cx<T>* line, Index stride) {
    for (Index k = 0; k < n_; ++k) {
      Cx<T> acc(0, 0);
      Index idx = 0;  // (j * k) mod n
      for (Index j = 0; j < n_; ++j) {
        acc += mul(line[j * stride], table_[static_cast<std::size_t>(idx)]);
        idx += k;
        if (idx >= n_) idx -= n_;
      }
      scratch_[static_cast<std::size_t>(k)] = acc;
    }
    for (Index k = 0; k < n_; ++k) line[k * stride] = scratch_[static_cast<std::size_t>(k)];
  }

  // Iterative Cooley-Tukey, decimation in time. The first two stages only
  // use the twiddles 1 and -+i, so they skip the multiply.
  void radix2(Cx<T>* line, Index stride) {
    Cx<T>* x = scratch_.data();
    for (Index i = 0; i < n_; ++i) x[reversed_[static_cast<std::size_t>(i)]] = line[i * stride];
    if (n_ >= 2) {
      for (Index i = 0; i < n_; i += 2) {
        const Cx<T> a = x[i];
        x[i] = a + x[i + 1];
        x[i + 1] = a - x[i + 1];
      }
    }
    if (n_ >= 4) {
      const T s = quarter_sign_;
      for (Index i = 0; i < n_; i += 4) {
        const Cx<T> a0 = x[i];
        const Cx<T> a1 = x[i + 1];
        const Cx<T> b0 = x[i + 2];
        const Cx<T> t1(-s * x[i + 3].imag(), s * x[i + 3].real());
        x[i] = a0 + b0;
        x[i + 2] = a0 - b0;
        x[i + 1] = a1 + t1;
        x[i + 3] = a1 - t1;
      }
    }
    const Cx<T>* w = stage_table_.data();
    for (Index len = 8; len <= n_; len <<= 1) {
      const Index half = len / 2;
      for (Index start = 0; start < n_; start += len) {
        Cx<T>* a = x + start;
        Cx<T>* b = a + half;
        for (Index k = 0; k < half; ++k) {
          const Cx<T> t = mul(w[k], b[k]);
          b[k] = a[k] - t;
          a[k] = a[k] + t;
        }
      }
      w += half;
    }
    for (Index i = 0; i < n_; ++i) line[i * stride] = x[i];
  }

  Index n_;
  bool fast_;
  std::vector<Cx<T>> table_;
  std::vector<Cx<T>> stage_table_;
  std::vector<Index> reversed_;
  T quarter_sign_ = T(-1);
  std::vector<Cx<T>> scratch_;
};

bool use_fast(const Shape& s, FftPath path) {
  switch (path) {
    case FftPath::Fast:
      return true;
    case FftPath::Naive:
      return false;
    case FftPath::Auto:
    default:
      return is_power_of_two(s.h) && is_power_of_two(s.w);
  }
}

// Transforms every plane of `in`; `inverse` flips the sign and scales by 1/(HW).
template <class T>
ComplexTensor<T> transform(const Tensor<T>& re, const Tensor<T>* im, bool inverse, FftPath path) {
  require_finite(re, inverse ? "ifft2" : "fft2");
  if (im != nullptr) require_finite(*im, inverse ? "ifft2" : "fft2");
  const Shape& s = re.shape();
  const bool fast = use_fast(s, path);
  ComplexTensor<T> out(s);
  const T norm = inverse ? T(1) / static_cast<T>(s.plane_size()) : T(1);

  parallel_for(s.n * s.c, [&](Index nc) {
    const Index n = nc / s.c;
    const Index c = nc % s.c;
    LineTransform<T> rows(s.w, inverse, fast);
    LineTransform<T> cols(s.h, inverse, fast);
    std::vector<Cx<T>> plane(static_cast<std::size_t>(s.plane_size()));
    const auto pr = re.plane(n, c);
    for (Index h = 0; h < s.h; ++h)
      for (Index w = 0; w < s.w; ++w) {
        plane[static_cast<std::size_t>(h * s.w + w)] =
            Cx<T>(pr(h, w), im != nullptr ? (*im)(n, c, h, w) : T(0));
      }
    for (Index h = 0; h < s.h; ++h) rows.apply(plane.data() + h * s.w, 1);
    for (Index w = 0; w < s.w; ++w) cols.apply(plane.data() + w, s.w);
    auto out_re = out.re.plane(n, c);
    auto out_im = out.im.plane(n, c);
    for (Index h = 0; h < s.h; ++h)
      for (Index w = 0; w < s.w; ++w) {
        const Cx<T> v = plane[static_cast<std::size_t>(h * s.w + w)];
        out_re(h, w) = v.real() * norm;
        out_im(h, w) = v.imag() * norm;
      }
  });
  return out;
}

template <class T>
void check_weights(const Shape& spectrum, const ComplexWeights<T>& w, const char* op) {
  const Shape& ws = w.re.shape();
  if (w.im.shape() != ws || ws.n != 1 || ws.c != spectrum.c || ws.h != spectrum.h ||
      ws.w != spectrum.w) {
    throw DimensionError(std::string(op) + ": weights " + ws.str() + " do not match spectrum " +
                         spectrum.str() + " (expected (1,C,H,W))");
  }
}

}  // namespace

template <class T>
ComplexTensor<T> fft2(const Tensor<T>& x, FftPath path) {
  return transform<T>(x, nullptr, false, path);
}

template <class T>
ComplexTensor<T> fft2(const ComplexTensor<T>& x, FftPath path) {
  return transform<T>(x.re, &x.im, false, path);
}

template <class T>
ComplexTensor<T> ifft2_complex(const ComplexTensor<T>& s, FftPath path) {
  return transform<T>(s.re, &s.im, true, path);
}

template <class T>
Tensor<T> ifft2(const ComplexTensor<T>& s, T* imag_residue, FftPath path) {
  ComplexTensor<T> full = ifft2_complex(s, path);
  if (imag_residue != nullptr) *imag_residue = full.im.array().abs().maxCoeff();
  return std::move(full.re);
}

template <class T>
ComplexTensor<T> modulate(const ComplexTensor<T>& s, const ComplexWeights<T>& w) {
  check_weights(s.shape(), w, "modulate");
  require_finite(s.re, "modulate");
  require_finite(s.im, "modulate");
  if (!w.re.all_finite() || !w.im.all_finite()) throw NumericError("modulate: non-finite weights");
  const Shape& sh = s.shape();
  const bool faulty = testing::active_fault() == testing::Fault::ModulateSign;
  ComplexTensor<T> out(sh);
  for (Index n = 0; n < sh.n; ++n) {
    const auto sr = s.re.channels(n).array();
    const auto si = s.im.channels(n).array();
    const auto wr = w.re.channels(0).array();
    const auto wi = w.im.channels(0).array();
    out.re.channels(n).array() = sr * wr - si * wi;
    if (faulty) {
      out.im.channels(n).array() = sr * wi - si * wr;
    } else {
      out.im.channels(n).array() = sr * wi + si * wr;
    }
  }
  return out;
}

template <class T>
ModulateGrads<T> modulate_backward(const ComplexTensor<T>& s, const ComplexWeights<T>& w,
                                   const ComplexTensor<T>& grad_out) {
  check_weights(s.shape(), w, "modulate_backward");
  require_same_shape(s.re, grad_out.re, "modulate_backward");
  const Shape& sh = s.shape();
  ModulateGrads<T> g{ComplexTensor<T>(sh),
                     {Tensor<T>(w.re.shape()), Tensor<T>(w.re.shape())}};
  const auto wr = w.re.channels(0).array();
  const auto wi = w.im.channels(0).array();
  for (Index n = 0; n < sh.n; ++n) {
    const auto gr = grad_out.re.channels(n).array();
    const auto gi = grad_out.im.channels(n).array();
    const auto sr = s.re.channels(n).array();
    const auto si = s.im.channels(n).array();
    g.spectrum.re.channels(n).array() = gr * wr + gi * wi;
    g.spectrum.im.channels(n).array() = gi * wr - gr * wi;
    g.weights.re.channels(0).array() += gr * sr + gi * si;
    g.weights.im.channels(0).array() += gi * sr - gr * si;
  }
  return g;
}

template <class T>
std::vector<Tensor<T>> multi_branch_enhance(const Tensor<T>& x,
                                            const std::vector<ComplexWeights<T>>& weights) {
  if (weights.empty()) throw ArgumentError("multi_branch_enhance: need at least one branch");
  const ComplexTensor<T> spectrum = fft2(x);
  std::vector<Tensor<T>> out;
  out.reserve(weights.size());
  for (const auto& w : weights) out.push_back(ifft2(modulate(spectrum, w)));
  return out;
}

#define SEP_INSTANTIATE_SPECTRAL(T)                                                          \
  template ComplexTensor<T> fft2(const Tensor<T>&, FftPath);                                 \
  template ComplexTensor<T> fft2(const ComplexTensor<T>&, FftPath);                          \
  template ComplexTensor<T> ifft2_complex(const ComplexTensor<T>&, FftPath);                 \
  template Tensor<T> ifft2(const ComplexTensor<T>&, T*, FftPath);                            \
  template ComplexTensor<T> modulate(const ComplexTensor<T>&, const ComplexWeights<T>&);     \
  template ModulateGrads<T> modulate_backward(const ComplexTensor<T>&,                       \
                                              const ComplexWeights<T>&,                      \
                                              const ComplexTensor<T>&);                      \
  template std::vector<Tensor<T>> multi_branch_enhance(const Tensor<T>&,                     \
                                                       const std::vector<ComplexWeights<T>>&);

SEP_INSTANTIATE_SPECTRAL(float)
SEP_INSTANTIATE_SPECTRAL(double)

#undef SEP_INSTANTIATE_SPECTRAL

}  // namespace sep
