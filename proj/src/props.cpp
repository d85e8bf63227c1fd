// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/props.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sep/ca2neck.hpp"
#include "sep/fddem.hpp"
#include "sep/gradcheck.hpp"
#include "sep/json.hpp"
#include "sep/msgrb.hpp"
#include "sep/ops.hpp"
#include "sep/spectral.hpp"

namespace sep {

namespace {

using T = double;
using Tn = Tensor<double>;

struct Outcome {
  bool pass;
  double metric;
};

struct Property {
  const char* suite;
  const char* name;
  Outcome (*run)(std::uint64_t seed);
};

Outcome at_most(double metric, double limit) { return {metric <= limit, metric}; }

double max_abs(const Tn& t) {
  double m = 0.0;
  for (double v : t.values()) m = std::max(m, std::abs(v));
  return m;
}

double energy(const Tn& t) {
  double e = 0.0;
  for (double v : t.values()) e += v * v;
  return e;
}

// Projects x onto fixed random weights so every output element matters.
LossFn<T> projected(std::function<Var<T>(Tape<T>&, const ParamVars<T>&)> body, const Shape& out,
                    Rng& rng) {
  Tn w = randn<T>(out, rng);
  return [body = std::move(body), w](Tape<T>& tape, const ParamVars<T>& p) {
    return ad::weighted_sum(body(tape, p), w);
  };
}

double worst_rel_err(const LossFn<T>& loss, const ParamStore<T>& params, std::uint64_t seed) {
  GradcheckOptions opts;
  opts.seed = seed;
  const GradReport report = gradcheck(loss, params, opts);
  double worst = 0.0;
  for (const auto& e : report.entries) worst = std::max(worst, e.max_rel_err);
  return worst;
}

// Fractional parts in [0.25, 0.75] keep every coordinate away from lattice lines.
Tn off_lattice_coords(const Shape& s, Index lo, Index hi, Rng& rng) {
  Tn c(s);
  for (auto& v : c.values()) {
    const double cell = static_cast<double>(lo) + static_cast<double>(rng.below(static_cast<std::uint64_t>(hi - lo)));
    v = cell + rng.uniform(0.25, 0.75);
  }
  return c;
}

// ---------------------------------------------------------------- tensor-core

Outcome conv2d_linearity(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({1, 3, 7, 7}, rng);
  const Tn y = randn<T>({1, 3, 7, 7}, rng);
  const Tn w = randn<T>({4, 3, 3, 3}, rng);
  const double a = rng.normal();
  const double b = rng.normal();
  const Tn lhs = conv2d(add(scale(x, a), scale(y, b)), w, nullptr, 1, 1);
  const Tn rhs = add(scale(conv2d(x, w, nullptr, 1, 1), a), scale(conv2d(y, w, nullptr, 1, 1), b));
  return at_most(max_abs_diff(lhs, rhs), 1e-10);
}

Outcome bilinear_identity_grid(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({2, 4, 6, 5}, rng);
  const Tn y = bilinear_sample(x, SamplingGrid<T>::identity(2, 2, 6, 5));
  return at_most(max_abs_diff(x, y), 1e-12);
}

Outcome bilinear_bounded(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({1, 3, 6, 6}, rng);
  const Tn coords = rand_uniform<T>({1, 2, 9, 9}, rng, -3.0, 9.0);
  const Tn y = bilinear_sample(x, grid_from_tensor(coords));
  double violation = 0.0;
  for (Index c = 0; c < 3; ++c) {
    const auto src = x.plane(0, c);
    const double lo = src.minCoeff();
    const double hi = src.maxCoeff();
    const auto out = y.plane(0, c);
    violation = std::max({violation, lo - out.minCoeff(), out.maxCoeff() - hi});
  }
  return at_most(violation, 0.0);
}

Outcome split_concat_roundtrip(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({2, 8, 3, 4}, rng);
  const Tn y = concat_channels(split_channels(x, {3, 1, 4}));
  return {x == y, max_abs_diff(x, y)};
}

Outcome nan_rejected(std::uint64_t seed) {
  Rng rng(seed);
  Tn x = randn<T>({1, 2, 4, 4}, rng);
  x(0, 1, 2, 3) = std::numeric_limits<double>::quiet_NaN();
  const Tn w = randn<T>({2, 2, 3, 3}, rng);
  const Tn dw = randn<T>({2, 1, 3, 3}, rng);
  const std::vector<std::function<void()>> ops = {
      [&] { conv2d(x, w, nullptr, 1, 1); },
      [&] { depthwise_conv2d(x, dw, 1); },
      [&] { bilinear_sample(x, SamplingGrid<T>::identity(1, 1, 4, 4)); },
      [&] { gelu(x); },
      [&] { sigmoid(x); },
      [&] { silu(x); },
      [&] { fft2(x); },
  };
  int escaped = 0;
  for (const auto& op : ops) {
    try {
      op();
      ++escaped;
    } catch (const NumericError&) {
    }
  }
  return at_most(escaped, 0.0);
}

// ---------------------------------------------------------------- autodiff

Outcome grad_conv2d(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 2, 6, 6}, rng));
  p.set("w", randn<T>({3, 2, 3, 3}, rng));
  p.set("b", randn<T>({1, 3, 1, 1}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        return ad::conv2d(v["x"], v["w"], std::optional<Var<T>>(v["b"]), 2, 1);
      },
      {1, 3, 3, 3}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_depthwise(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 3, 7, 7}, rng));
  p.set("w", randn<T>({3, 1, 5, 5}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) { return ad::depthwise_conv2d(v["x"], v["w"], 2); },
      {1, 3, 7, 7}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_bilinear(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 4, 6, 6}, rng));
  // Some coordinates fall outside the image so the clamp is exercised too.
  p.set("coords", off_lattice_coords({1, 4, 5, 5}, -2, 7, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) { return ad::bilinear_sample(v["x"], v["coords"]); },
      {1, 4, 5, 5}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_activations(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 3, 5, 5}, rng, 2.0));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        return ad::concat_channels<T>({ad::gelu(v["x"]), ad::sigmoid(v["x"]), ad::silu(v["x"])});
      },
      {1, 9, 5, 5}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_channels(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({2, 5, 4, 4}, rng));
  p.set("y", randn<T>({2, 2, 4, 4}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        const auto parts = ad::split_channels(v["x"], {2, 3});
        return ad::concat_channels<T>({ad::mul(parts[0], v["y"]), parts[1], v["y"]});
      },
      {2, 7, 4, 4}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_pooling(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({2, 3, 5, 5}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        const Var<T> g = ad::add(ad::global_avg_pool(v["x"]), ad::global_max_pool(v["x"]));
        const Var<T> c = ad::add(ad::channel_mean(v["x"]), ad::channel_max(v["x"]));
        return ad::mul(g, c);
      },
      {2, 3, 5, 5}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_broadcast(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({2, 3, 4, 4}, rng));
  p.set("row", randn<T>({1, 3, 1, 4}, rng));
  p.set("gain", randn<T>({2, 1, 4, 1}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        return ad::scale(ad::mul(ad::add(v["x"], v["row"]), v["gain"]), 0.5);
      },
      {2, 3, 4, 4}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome grad_pixel_shuffle(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 8, 3, 3}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) { return ad::pixel_shuffle(v["x"], 2); }, {1, 2, 6, 6},
      rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

Outcome path_sum_accumulation(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({1, 2, 4, 4}, rng);
  auto grad_of = [&](int which) {
    Tape<T> tape;
    const Var<T> v = tape.leaf("x", x);
    Var<T> y = which == 1 ? ad::sigmoid(v) : which == 2 ? ad::gelu(v) : ad::add(ad::sigmoid(v), ad::gelu(v));
    return tape.backward(ad::sum(y)).at("x");
  };
  return at_most(max_abs_diff(grad_of(0), add(grad_of(1), grad_of(2))), 1e-12);
}

// ---------------------------------------------------------------- spectral

Outcome fft_roundtrip(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (Index n : {4, 7, 8, 12, 16, 64}) {
    const Tn x = randn<T>({1, 2, n, n}, rng);
    worst = std::max(worst, static_cast<double>(max_abs_diff(x, ifft2(fft2(x)))));
  }
  return at_most(worst, 1e-10);
}

Outcome fft_parseval(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (Index n : {5, 8, 16, 32}) {
    const Tn x = randn<T>({1, 3, n, n + 2}, rng);
    const auto s = fft2(x);
    for (Index c = 0; c < 3; ++c) {
      const double spatial = x.plane(0, c).squaredNorm();
      const double spectral =
          (s.re.plane(0, c).squaredNorm() + s.im.plane(0, c).squaredNorm()) / static_cast<double>(n * (n + 2));
      worst = std::max(worst, std::abs(spatial - spectral) / spatial);
    }
  }
  return at_most(worst, 1e-9);
}

Outcome fft_linearity(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({1, 2, 16, 12}, rng);
  const Tn y = randn<T>({1, 2, 16, 12}, rng);
  const double a = rng.normal();
  const double b = rng.normal();
  const auto lhs = fft2(add(scale(x, a), scale(y, b)));
  const auto fx = fft2(x);
  const auto fy = fft2(y);
  const double err = std::max(max_abs_diff(lhs.re, add(scale(fx.re, a), scale(fy.re, b))),
                              max_abs_diff(lhs.im, add(scale(fx.im, a), scale(fy.im, b))));
  return at_most(err, 1e-10);
}

Outcome fft_fast_vs_naive(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (Index n : {1, 2, 4, 8, 16, 32, 64}) {
    const Tn x = randn<T>({1, 1, n, n}, rng);
    const auto fast = fft2(x, FftPath::Fast);
    const auto naive = fft2(x, FftPath::Naive);
    worst = std::max({worst, static_cast<double>(max_abs_diff(fast.re, naive.re)),
                      static_cast<double>(max_abs_diff(fast.im, naive.im))});
  }
  return at_most(worst, 1e-9);
}

Outcome fft_hermitian(std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (Index h : {6, 8}) {
    const Index w = h + 3;
    const Tn x = randn<T>({1, 1, h, w}, rng);
    const auto s = fft2(x);
    for (Index u = 0; u < h; ++u) {
      for (Index v = 0; v < w; ++v) {
        const Index mu = (h - u) % h;
        const Index mv = (w - v) % w;
        worst = std::max({worst, std::abs(s.re(0, 0, u, v) - s.re(0, 0, mu, mv)),
                          std::abs(s.im(0, 0, u, v) + s.im(0, 0, mu, mv))});
      }
    }
  }
  return at_most(worst, 1e-9);
}

Outcome modulate_identity_roundtrip(std::uint64_t seed) {
  Rng rng(seed);
  const Tn x = randn<T>({2, 3, 8, 6}, rng);
  const Tn y = ifft2(modulate(fft2(x), ComplexWeights<T>::identity(3, 8, 6)));
  return at_most(max_abs_diff(x, y), 1e-10);
}

// Unit-modulus weights only rotate phases, so the inverse keeps the energy.
Outcome modulated_parseval(std::uint64_t seed) {
  Rng rng(seed);
  const Index c = 2;
  const Index h = 8;
  const Index w = 8;
  const Tn x = randn<T>({1, c, h, w}, rng);
  ComplexWeights<T> wts{Tn({1, c, h, w}), Tn({1, c, h, w})};
  for (Index i = 0; i < wts.re.numel(); ++i) {
    const double phase = rng.uniform(-M_PI, M_PI);
    wts.re[i] = std::cos(phase);
    wts.im[i] = std::sin(phase);
  }
  const auto back = ifft2_complex(modulate(fft2(x), wts));
  const double spatial = energy(x);
  const double rotated = energy(back.re) + energy(back.im);
  return at_most(std::abs(rotated - spatial) / spatial, 1e-9);
}

Outcome spectral_pipeline_grad(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p;
  p.set("x", randn<T>({1, 2, 8, 6}, rng));
  p.set("w.re", randn<T>({1, 2, 8, 6}, rng));
  p.set("w.im", randn<T>({1, 2, 8, 6}, rng));
  auto loss = projected(
      [](Tape<T>&, const ParamVars<T>& v) {
        return ad::ifft2(ad::modulate(ad::fft2(v["x"]), ComplexVar<T>{v["w.re"], v["w.im"]}));
      },
      {1, 2, 8, 6}, rng);
  return at_most(worst_rel_err(loss, p, seed), 1e-4);
}

// ---------------------------------------------------------------- fddem

const FddemConfig kFddem{4, 8, 8, 3, 4};

Outcome fddem_shapes(std::uint64_t seed) {
  Rng rng(seed);
  int mismatches = 0;
  for (const FddemConfig& cfg : {FddemConfig{4, 8, 8, 3, 4}, FddemConfig{8, 6, 10, 2, 2},
                                 FddemConfig{1, 5, 3, 1, 1}}) {
    const Tn x = randn<T>({2, cfg.channels, cfg.height, cfg.width}, rng);
    const Tn y = fddem_forward(x, cfg, fddem_init<T>(cfg, rng, Init::Random));
    if (y.shape() != x.shape()) ++mismatches;
  }
  return at_most(mismatches, 0.0);
}

Outcome fddem_zero_input(std::uint64_t seed) {
  Rng rng(seed);
  ParamStore<T> p = fddem_init<T>(kFddem, rng, Init::Random);
  for (const char* bias : {"spatial.conv1.bias", "spatial.conv2.bias", "compress.bias"}) {
    p.set(bias, Tn({1, kFddem.channels, 1, 1}));
  }
  const Tn y = fddem_forward(Tn({1, 4, 8, 8}), kFddem, p);
  return at_most(max_abs(y), 0.0);
}

Outcome fddem_frequency_bounded(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = fddem_init<T>(kFddem, rng, Init::Random);
  const Tn x = randn<T>({2, 4, 8, 8}, rng);
  const auto branches = multi_branch_enhance(x, fddem_branch_weights(kFddem, p));
  const Tn f = conv2d(concat_channels(branches), p.at("compress.weight"), &p.at("compress.bias"), 1, 0);
  const Tn a = dual_attention(f, kFddem.reduction, p.scoped("attn"));
  return at_most(max_abs(mul(a, f)) - max_abs(f), 0.0);
}

Outcome fddem_attention_range(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = fddem_init<T>(kFddem, rng, Init::Random).scoped("attn");
  const Tn f = randn<T>({2, 4, 8, 8}, rng, 3.0);
  const Tn a = dual_attention(f, kFddem.reduction, p);
  // Distance of the closest value to either end of (0, 1); must stay positive.
  double margin = 1.0;
  for (double v : a.values()) margin = std::min({margin, v, 1.0 - v});
  return {margin > 0.0, margin};
}

Outcome fddem_gradient_coverage(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = fddem_init<T>(kFddem, rng, Init::Random);
  const Tn x = randn<T>({1, 4, 8, 8}, rng);
  const Tn proj = randn<T>({1, 4, 8, 8}, rng);
  Tape<T> tape;
  const Var<T> y = fddem(tape.constant(x), kFddem, bind(tape, p));
  const ParamStore<T> grads = tape.backward(ad::weighted_sum(y, proj));
  int dead = 0;
  for (const auto& [name, g] : grads) {
    if (max_abs(g) == 0.0) ++dead;
  }
  return at_most(dead, 0.0);
}

Outcome fddem_identity_at_init(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = fddem_init<T>(kFddem, rng, Init::Fresh);
  const Tn x = randn<T>({2, 4, 8, 8}, rng);
  return at_most(max_abs_diff(x, fddem_forward(x, kFddem, p)), 0.0);
}

// ---------------------------------------------------------------- msgrb

const MsgrbConfig kMsgrb{4, {3, 5, 7}};

std::vector<Tn> msgrb_kernels(const MsgrbConfig& cfg, const ParamStore<T>& p) {
  std::vector<Tn> k;
  for (Index size : cfg.kernels) k.push_back(p.at("dw" + std::to_string(size) + ".weight"));
  return k;
}

Outcome msgrb_gate_range(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = msgrb_init<T>(kMsgrb, rng, Init::Random);
  const Tn x = randn<T>({2, 4, 8, 8}, rng);
  const Tn expanded = conv2d(x, p.at("expand.weight"), &p.at("expand.bias"), 1, 0);
  const auto halves = split_channels(expanded, {4, 4});
  const Tn context = msdwconv(gelu(halves[0]), msgrb_kernels(kMsgrb, p));
  const Tn gated = mul(context, sigmoid(halves[1]));
  double violation = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < gated.numel(); ++i) {
    violation = std::max(violation, std::abs(gated[i]) - std::abs(context[i]));
  }
  return at_most(violation, 0.0);
}

Outcome msgrb_identity_at_init(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = msgrb_init<T>(kMsgrb, rng, Init::Fresh);
  const Tn x = randn<T>({2, 4, 8, 8}, rng);
  return at_most(max_abs_diff(x, msgrb_forward(x, kMsgrb, p)), 0.0);
}

Outcome msgrb_shapes(std::uint64_t seed) {
  Rng rng(seed);
  int mismatches = 0;
  for (const MsgrbConfig& cfg : {MsgrbConfig{4, {3, 5, 7}}, MsgrbConfig{3, {1, 3}},
                                 MsgrbConfig{6, {5}}}) {
    const Tn x = randn<T>({1, cfg.channels, 7, 5}, rng);
    if (msgrb_forward(x, cfg, msgrb_init<T>(cfg, rng, Init::Random)).shape() != x.shape()) ++mismatches;
  }
  return at_most(mismatches, 0.0);
}

Outcome msgrb_channel_locality(std::uint64_t seed) {
  Rng rng(seed);
  const ParamStore<T> p = msgrb_init<T>(kMsgrb, rng, Init::Random);
  const auto kernels = msgrb_kernels(kMsgrb, p);
  const Tn h = randn<T>({1, 4, 9, 9}, rng);
  const Tn base = msdwconv(h, kernels);
  int leaks = 0;
  for (Index j = 0; j < 4; ++j) {
    Tn bumped = h;
    bumped.plane(0, j).array() += 1.0;
    const Tn out = msdwconv(bumped, kernels);
    for (Index c = 0; c < 4; ++c) {
      if (c != j && out.plane(0, c) != base.plane(0, c)) ++leaks;
    }
  }
  return at_most(leaks, 0.0);
}

// ---------------------------------------------------------------- ca2neck

Outcome ldconv_linear_growth(std::uint64_t seed) {
  Rng rng(seed);
  int mismatches = 0;
  for (Index n : {1, 5, 9, 13}) {
    const LdconvConfig cfg{3, 4, n, 1};
    if (ldconv_weights_per_output(ldconv_init<T>(cfg, rng)) != cfg.in_channels * n) ++mismatches;
  }
  return at_most(mismatches, 0.0);
}

Outcome ldconv_coords_zero_mean(std::uint64_t) {
  double worst = 0.0;
  for (Index n = 1; n <= 30; ++n) {
    double sr = 0.0;
    double sc = 0.0;
    for (const auto& [r, c] : ldconv_coords(n)) {
      sr += r;
      sc += c;
    }
    worst = std::max({worst, std::abs(sr), std::abs(sc)});
  }
  return at_most(worst, 1e-12);
}

Outcome dysample_scope_bound(std::uint64_t seed) {
  Rng rng(seed);
  const DysampleConfig cfg{4, 2, 1, 0.25};
  const Tn x = rand_uniform<T>({2, 4, 5, 5}, rng, -1.0, 1.0);
  // |head| <= sum|w| * max|x| + |b| <= 0.5 + 0.5.
  ParamStore<T> p;
  Tn w = rand_uniform<T>({8, 4, 1, 1}, rng, -0.125, 0.125);
  p.set("offset.weight", w);
  p.set("offset.bias", rand_uniform<T>({1, 8, 1, 1}, rng, -0.5, 0.5));
  const Tn base = dysample_base_grid<T>(1, 2, 5, 5);
  double worst = 0.0;
  for (int fixture = 0; fixture < 2; ++fixture) {
    if (fixture == 1) {
      // Saturated head: every offset sits exactly at +-1.
      p.set("offset.weight", Tn({8, 4, 1, 1}));
      Tn b({1, 8, 1, 1});
      for (Index i = 0; i < 8; ++i) b[i] = i % 2 == 0 ? 1.0 : -1.0;
      p.set("offset.bias", b);
    }
    const Tn coords = dysample_coords(x, cfg, p);
    for (Index n = 0; n < 2; ++n)
      for (Index c = 0; c < 2; ++c)
        for (Index i = 0; i < 10; ++i)
          for (Index j = 0; j < 10; ++j) {
            worst = std::max(worst, std::abs(coords(n, c, i, j) - base(0, c, i, j)));
          }
  }
  return at_most(worst, cfg.scope);
}

Outcome dysample_constant(std::uint64_t seed) {
  Rng rng(seed);
  const DysampleConfig cfg{3, 2, 1, 0.25};
  const Tn x = Tn::full({1, 3, 6, 6}, 0.3125);
  const Tn y = dysample_forward(x, cfg, dysample_init<T>(cfg, rng, Init::Random));
  return at_most(max_abs_diff(y, Tn::full(y.shape(), 0.3125)), 0.0);
}

Outcome dysample_bounded(std::uint64_t seed) {
  Rng rng(seed);
  const DysampleConfig cfg{4, 3, 2, 0.25};
  const Tn x = randn<T>({1, 4, 5, 5}, rng);
  const Tn y = dysample_forward(x, cfg, dysample_init<T>(cfg, rng, Init::Random));
  double violation = 0.0;
  for (Index c = 0; c < 4; ++c) {
    violation = std::max({violation, x.plane(0, c).minCoeff() - y.plane(0, c).minCoeff(),
                          y.plane(0, c).maxCoeff() - x.plane(0, c).maxCoeff()});
  }
  return at_most(violation, 0.0);
}

Outcome neck_shapes(std::uint64_t seed) {
  Rng rng(seed);
  NeckConfig cfg;
  cfg.channels = {4, 8, 16};
  const std::vector<Tn> levels = {randn<T>({1, 4, 8, 8}, rng), randn<T>({1, 8, 4, 4}, rng),
                                  randn<T>({1, 16, 2, 2}, rng)};
  const auto out = ca2neck_forward(levels, cfg, neck_init<T>(cfg, rng, Init::Random));
  int mismatches = out.size() == 3 ? 0 : 1;
  for (std::size_t l = 0; l < std::min<std::size_t>(3, out.size()); ++l) {
    if (out[l].shape() != levels[l].shape()) ++mismatches;
  }
  return at_most(mismatches, 0.0);
}

const std::vector<Property>& registry() {
  static const std::vector<Property> props = {
      {"tensor-core", "conv2d_linearity", conv2d_linearity},
      {"tensor-core", "bilinear_identity_grid", bilinear_identity_grid},
      {"tensor-core", "bilinear_bounded", bilinear_bounded},
      {"tensor-core", "split_concat_roundtrip", split_concat_roundtrip},
      {"tensor-core", "nan_rejected", nan_rejected},
      {"autodiff", "gradcheck_conv2d", grad_conv2d},
      {"autodiff", "gradcheck_depthwise_conv2d", grad_depthwise},
      {"autodiff", "gradcheck_bilinear_sample", grad_bilinear},
      {"autodiff", "gradcheck_activations", grad_activations},
      {"autodiff", "gradcheck_split_concat", grad_channels},
      {"autodiff", "gradcheck_pooling", grad_pooling},
      {"autodiff", "gradcheck_broadcast", grad_broadcast},
      {"autodiff", "gradcheck_pixel_shuffle", grad_pixel_shuffle},
      {"autodiff", "path_sum_accumulation", path_sum_accumulation},
      {"spectral", "roundtrip", fft_roundtrip},
      {"spectral", "parseval", fft_parseval},
      {"spectral", "linearity", fft_linearity},
      {"spectral", "fast_vs_naive", fft_fast_vs_naive},
      {"spectral", "hermitian_symmetry", fft_hermitian},
      {"spectral", "modulate_identity_roundtrip", modulate_identity_roundtrip},
      {"spectral", "modulated_parseval", modulated_parseval},
      {"spectral", "gradcheck_pipeline", spectral_pipeline_grad},
      {"fddem", "shape_preservation", fddem_shapes},
      {"fddem", "zero_input", fddem_zero_input},
      {"fddem", "frequency_path_bounded", fddem_frequency_bounded},
      {"fddem", "attention_range", fddem_attention_range},
      {"fddem", "gradient_coverage", fddem_gradient_coverage},
      {"fddem", "identity_at_init", fddem_identity_at_init},
      {"msgrb", "gate_range", msgrb_gate_range},
      {"msgrb", "identity_at_init", msgrb_identity_at_init},
      {"msgrb", "shape_preservation", msgrb_shapes},
      {"msgrb", "channel_locality", msgrb_channel_locality},
      {"ca2neck", "ldconv_linear_growth", ldconv_linear_growth},
      {"ca2neck", "ldconv_coords_zero_mean", ldconv_coords_zero_mean},
      {"ca2neck", "dysample_scope_bound", dysample_scope_bound},
      {"ca2neck", "dysample_constant", dysample_constant},
      {"ca2neck", "dysample_bounded", dysample_bounded},
      {"ca2neck", "neck_shapes", neck_shapes},
  };
  return props;
}

}  // namespace

std::string PropResult::to_json() const {
  return json::Object()
      .field("suite", suite)
      .field("property", property)
      .field("seed", seed)
      .field("pass", pass)
      .field("metric", metric)
      .str();
}

std::vector<std::string> prop_suites() {
  std::vector<std::string> suites;
  for (const auto& p : registry()) {
    if (std::find(suites.begin(), suites.end(), p.suite) == suites.end()) suites.emplace_back(p.suite);
  }
  return suites;
}

std::vector<PropResult> run_props(const std::string& suite, std::uint64_t seed,
                                  const std::function<void(const PropResult&)>& on_result) {
  if (!suite.empty()) {
    const auto suites = prop_suites();
    if (std::find(suites.begin(), suites.end(), suite) == suites.end()) {
      throw ArgumentError("unknown property suite '" + suite + "'");
    }
  }
  std::vector<PropResult> results;
  for (const auto& prop : registry()) {
    if (!suite.empty() && suite != prop.suite) continue;
    PropResult r;
    r.suite = prop.suite;
    r.property = prop.name;
    r.seed = seed;
    try {
      const Outcome o = prop.run(seed);
      r.pass = o.pass;
      r.metric = o.metric;
    } catch (const std::exception& e) {
      r.pass = false;
      r.metric = std::numeric_limits<double>::quiet_NaN();
      r.error = e.what();
    }
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace sep
