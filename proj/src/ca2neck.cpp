// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/ca2neck.hpp"

#include <cmath>
#include <string>

namespace sep {

namespace {

template <class T>
using OptVar = std::optional<Var<T>>;

void check_ldconv(const LdconvConfig& cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1) throw ArgumentError("ldconv: channels must be >= 1");
  if (cfg.points < 1) throw ArgumentError("ldconv: sample point count must be >= 1");
  if (cfg.stride < 1) throw ArgumentError("ldconv: stride must be >= 1");
}

void check_dysample(const DysampleConfig& cfg) {
  if (cfg.channels < 1) throw ArgumentError("dysample: channels must be >= 1");
  if (cfg.scale < 2) throw ArgumentError("dysample: scale must be >= 2");
  if (cfg.groups < 1) throw ArgumentError("dysample: groups must be >= 1");
  if (cfg.channels % cfg.groups != 0) {
    throw DimensionError("dysample: " + std::to_string(cfg.channels) +
                         " channels do not split into " + std::to_string(cfg.groups) + " groups");
  }
  if (!std::isfinite(cfg.scope) || cfg.scope < 0.0) {
    throw ArgumentError("dysample: scope factor must be finite and non-negative");
  }
}

void check_neck(const NeckConfig& cfg) {
  for (Index c : cfg.channels) {
    if (c < 1) throw ArgumentError("ca2neck: level channels must be >= 1");
  }
}

// The lateral input occupies the first `lateral` channels of the merge input.
template <class T>
Tensor<T> init_merge(Index lateral, Index resampled, Rng& rng, Init init) {
  const Shape s{lateral, lateral + resampled, 1, 1};
  if (init != Init::Fresh) return init_conv_weight<T>(s, rng, init);
  Tensor<T> w(s);
  for (Index o = 0; o < lateral; ++o) w(o, o, 0, 0) = T(1);
  return w;
}

template <class T>
Var<T> merge(const Var<T>& lateral, const Var<T>& resampled, const ParamVars<T>& p) {
  return ad::conv2d(ad::concat_channels<T>({lateral, resampled}), p["weight"], OptVar<T>(p["bias"]),
                    1, 0);
}

template <class T>
void validate_merge(const ParamStore<T>& params, const std::string& prefix, Index lateral,
                    Index resampled) {
  expect_shape(params, prefix + ".weight", Shape{lateral, lateral + resampled, 1, 1});
  expect_shape(params, prefix + ".bias", Shape{1, lateral, 1, 1});
}

}  // namespace

// ---------------------------------------------------------------- LDConv

std::vector<std::pair<double, double>> ldconv_coords(Index n) {
  if (n < 1) throw ArgumentError("ldconv_coords: N must be >= 1, got " + std::to_string(n));
  Index b = 1;
  while (b * b < n) ++b;
  std::vector<std::pair<double, double>> pts;
  double sr = 0.0;
  double sc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto r = static_cast<double>(i / b);
    const auto c = static_cast<double>(i % b);
    pts.emplace_back(r, c);
    sr += r;
    sc += c;
  }
  const double mr = sr / static_cast<double>(n);
  const double mc = sc / static_cast<double>(n);
  for (auto& [r, c] : pts) {
    r -= mr;
    c -= mc;
  }
  return pts;
}

template <class T>
ParamStore<T> ldconv_init(const LdconvConfig& cfg, Rng& rng, Init init) {
  check_ldconv(cfg);
  const Index n = cfg.points;
  ParamStore<T> p;
  // Random offsets stay well under a pixel so sample points keep their order.
  p.set("offset.weight", init_conv_weight<T>(Shape{2 * n, cfg.in_channels, 3, 3}, rng, init,
                                             ZeroWhenFresh::Yes, 0.25));
  p.set("offset.bias", init_bias<T>(2 * n, rng, init));
  p.set("mix.weight",
        init_conv_weight<T>(Shape{cfg.out_channels, n * cfg.in_channels, 1, 1}, rng, init));
  return p;
}

template <class T>
void ldconv_validate(const LdconvConfig& cfg, const ParamStore<T>& params) {
  check_ldconv(cfg);
  const Index n = cfg.points;
  expect_shape(params, "offset.weight", Shape{2 * n, cfg.in_channels, 3, 3});
  expect_shape(params, "offset.bias", Shape{1, 2 * n, 1, 1});
  expect_shape(params, "mix.weight", Shape{cfg.out_channels, n * cfg.in_channels, 1, 1});
}

template <class T>
Index ldconv_weights_per_output(const ParamStore<T>& params) {
  const Shape& s = params.at("mix.weight").shape();
  return s.c * s.h * s.w;
}

template <class T>
Var<T> ldconv_sampling(const Var<T>& x, const LdconvConfig& cfg, const ParamVars<T>& p) {
  check_ldconv(cfg);
  if (x.shape().c != cfg.in_channels) {
    throw DimensionError("ldconv: input has " + std::to_string(x.shape().c) +
                         " channels, expected " + std::to_string(cfg.in_channels));
  }
  const Var<T> offsets =
      ad::conv2d(x, p["offset.weight"], OptVar<T>(p["offset.bias"]), cfg.stride, 1);
  const Index ho = offsets.shape().h;
  const Index wo = offsets.shape().w;
  const auto pts = ldconv_coords(cfg.points);
  Tensor<T> base(Shape{1, 2 * cfg.points, ho, wo});
  for (Index k = 0; k < cfg.points; ++k) {
    const auto [pr, pc] = pts[static_cast<std::size_t>(k)];
    for (Index i = 0; i < ho; ++i) {
      for (Index j = 0; j < wo; ++j) {
        base(0, 2 * k, i, j) = static_cast<T>(static_cast<double>(i * cfg.stride) + pr);
        base(0, 2 * k + 1, i, j) = static_cast<T>(static_cast<double>(j * cfg.stride) + pc);
      }
    }
  }
  return ad::add_constant(offsets, base);
}

template <class T>
Var<T> ldconv(const Var<T>& x, const LdconvConfig& cfg, const ParamVars<T>& p) {
  const Var<T> coords = ldconv_sampling(x, cfg, p);
  // One grid group per sample point, each reading every input channel.
  const std::vector<Var<T>> copies(static_cast<std::size_t>(cfg.points), x);
  const Var<T> sampled = ad::bilinear_sample(ad::concat_channels(copies), coords);
  return ad::conv2d(sampled, p["mix.weight"], OptVar<T>(), 1, 0);
}

template <class T>
Tensor<T> ldconv_forward(const Tensor<T>& x, const LdconvConfig& cfg, const ParamStore<T>& params) {
  ldconv_validate(cfg, params);
  Tape<T> tape;
  return ldconv(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

// ---------------------------------------------------------------- DySample

template <class T>
ParamStore<T> dysample_init(const DysampleConfig& cfg, Rng& rng, Init init) {
  check_dysample(cfg);
  const Index oc = cfg.offset_channels();
  ParamStore<T> p;
  p.set("offset.weight",
        init_conv_weight<T>(Shape{oc, cfg.channels, 1, 1}, rng, init, ZeroWhenFresh::Yes));
  p.set("offset.bias", init_bias<T>(oc, rng, init));
  return p;
}

template <class T>
void dysample_validate(const DysampleConfig& cfg, const ParamStore<T>& params) {
  check_dysample(cfg);
  const Index oc = cfg.offset_channels();
  expect_shape(params, "offset.weight", Shape{oc, cfg.channels, 1, 1});
  expect_shape(params, "offset.bias", Shape{1, oc, 1, 1});
}

template <class T>
Tensor<T> dysample_base_grid(Index groups, Index scale, Index h, Index w) {
  Tensor<T> base(Shape{1, 2 * groups, h * scale, w * scale});
  const auto s = static_cast<double>(scale);
  for (Index g = 0; g < groups; ++g) {
    for (Index i = 0; i < h * scale; ++i) {
      for (Index j = 0; j < w * scale; ++j) {
        base(0, 2 * g, i, j) = static_cast<T>((static_cast<double>(i) + 0.5) / s - 0.5);
        base(0, 2 * g + 1, i, j) = static_cast<T>((static_cast<double>(j) + 0.5) / s - 0.5);
      }
    }
  }
  return base;
}

template <class T>
Var<T> dysample_sampling(const Var<T>& x, const DysampleConfig& cfg, const ParamVars<T>& p) {
  check_dysample(cfg);
  const Shape& s = x.shape();
  if (s.c != cfg.channels) {
    throw DimensionError("dysample: input has " + std::to_string(s.c) + " channels, expected " +
                         std::to_string(cfg.channels));
  }
  const Var<T> head = ad::conv2d(x, p["offset.weight"], OptVar<T>(p["offset.bias"]), 1, 0);
  if (head.shape().c != cfg.offset_channels()) {
    throw DimensionError("dysample: offset head produces " + std::to_string(head.shape().c) +
                         " channels, expected " + std::to_string(cfg.offset_channels()));
  }
  const Var<T> offsets = ad::pixel_shuffle(head, cfg.scale);
  return ad::add_constant(ad::scale(offsets, static_cast<T>(cfg.scope)),
                          dysample_base_grid<T>(cfg.groups, cfg.scale, s.h, s.w));
}

template <class T>
Var<T> dysample(const Var<T>& x, const DysampleConfig& cfg, const ParamVars<T>& p) {
  return ad::bilinear_sample(x, dysample_sampling(x, cfg, p));
}

template <class T>
Tensor<T> dysample_forward(const Tensor<T>& x, const DysampleConfig& cfg,
                           const ParamStore<T>& params) {
  dysample_validate(cfg, params);
  Tape<T> tape;
  return dysample(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

template <class T>
Tensor<T> dysample_coords(const Tensor<T>& x, const DysampleConfig& cfg,
                          const ParamStore<T>& params) {
  dysample_validate(cfg, params);
  Tape<T> tape;
  return dysample_sampling(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

// ---------------------------------------------------------------- neck

LdconvConfig neck_down_config(const NeckConfig& cfg, int level) {
  const Index c = cfg.channels.at(static_cast<std::size_t>(level));
  return LdconvConfig{c, c, cfg.points, 2};
}

DysampleConfig neck_up_config(const NeckConfig& cfg, int level) {
  return DysampleConfig{cfg.channels.at(static_cast<std::size_t>(level)), 2, cfg.groups, cfg.scope};
}

MsgrbConfig neck_fuse_config(const NeckConfig& cfg, int level) {
  return MsgrbConfig{cfg.channels.at(static_cast<std::size_t>(level)), cfg.kernels};
}

template <class T>
ParamStore<T> neck_init(const NeckConfig& cfg, Rng& rng, Init init) {
  check_neck(cfg);
  const auto& c = cfg.channels;
  ParamStore<T> p;
  auto add_merge = [&](const std::string& prefix, Index lateral, Index resampled) {
    p.set(prefix + ".weight", init_merge<T>(lateral, resampled, rng, init));
    p.set(prefix + ".bias", init_bias<T>(lateral, rng, init));
  };
  p.merge("td.up5", dysample_init<T>(neck_up_config(cfg, 2), rng, init));
  add_merge("td.merge4", c[1], c[2]);
  p.merge("td.fuse4", msgrb_init<T>(neck_fuse_config(cfg, 1), rng, init));
  p.merge("td.up4", dysample_init<T>(neck_up_config(cfg, 1), rng, init));
  add_merge("td.merge3", c[0], c[1]);
  p.merge("td.fuse3", msgrb_init<T>(neck_fuse_config(cfg, 0), rng, init));
  p.merge("bu.down3", ldconv_init<T>(neck_down_config(cfg, 0), rng, init));
  add_merge("bu.merge4", c[1], c[0]);
  p.merge("bu.fuse4", msgrb_init<T>(neck_fuse_config(cfg, 1), rng, init));
  p.merge("bu.down4", ldconv_init<T>(neck_down_config(cfg, 1), rng, init));
  add_merge("bu.merge5", c[2], c[1]);
  p.merge("bu.fuse5", msgrb_init<T>(neck_fuse_config(cfg, 2), rng, init));
  return p;
}

template <class T>
void neck_validate(const NeckConfig& cfg, const ParamStore<T>& params) {
  check_neck(cfg);
  const auto& c = cfg.channels;
  dysample_validate(neck_up_config(cfg, 2), params.scoped("td.up5"));
  validate_merge(params, "td.merge4", c[1], c[2]);
  msgrb_validate(neck_fuse_config(cfg, 1), params.scoped("td.fuse4"));
  dysample_validate(neck_up_config(cfg, 1), params.scoped("td.up4"));
  validate_merge(params, "td.merge3", c[0], c[1]);
  msgrb_validate(neck_fuse_config(cfg, 0), params.scoped("td.fuse3"));
  ldconv_validate(neck_down_config(cfg, 0), params.scoped("bu.down3"));
  validate_merge(params, "bu.merge4", c[1], c[0]);
  msgrb_validate(neck_fuse_config(cfg, 1), params.scoped("bu.fuse4"));
  ldconv_validate(neck_down_config(cfg, 1), params.scoped("bu.down4"));
  validate_merge(params, "bu.merge5", c[2], c[1]);
  msgrb_validate(neck_fuse_config(cfg, 2), params.scoped("bu.fuse5"));
}

void neck_check_levels(const NeckConfig& cfg, const std::array<Shape, 3>& levels) {
  for (std::size_t l = 0; l < 3; ++l) {
    if (levels[l].c != cfg.channels[l]) {
      throw DimensionError("ca2neck: level " + std::to_string(l) + " has " +
                           std::to_string(levels[l].c) + " channels, expected " +
                           std::to_string(cfg.channels[l]));
    }
    if (levels[l].n != levels[0].n) throw DimensionError("ca2neck: levels disagree on batch size");
  }
  for (std::size_t l = 0; l + 1 < 3; ++l) {
    const Shape& fine = levels[l];
    const Shape& coarse = levels[l + 1];
    if (fine.h != 2 * coarse.h || fine.w != 2 * coarse.w) {
      throw DimensionError("ca2neck: level " + std::to_string(l) + " is " + fine.str() +
                           " but level " + std::to_string(l + 1) + " is " + coarse.str() +
                           "; consecutive levels must differ by exactly 2x");
    }
  }
}

template <class T>
std::vector<Var<T>> ca2neck(const std::vector<Var<T>>& levels, const NeckConfig& cfg,
                            const ParamVars<T>& p) {
  if (levels.size() != 3) {
    throw DimensionError("ca2neck: expected 3 pyramid levels, got " + std::to_string(levels.size()));
  }
  neck_check_levels(cfg, {levels[0].shape(), levels[1].shape(), levels[2].shape()});
  const Var<T>& p3 = levels[0];
  const Var<T>& p4 = levels[1];
  const Var<T>& p5 = levels[2];

  const Var<T> up5 = dysample(p5, neck_up_config(cfg, 2), p.scoped("td.up5"));
  const Var<T> t4 = msgrb(merge(p4, up5, p.scoped("td.merge4")), neck_fuse_config(cfg, 1),
                          p.scoped("td.fuse4"));
  const Var<T> up4 = dysample(t4, neck_up_config(cfg, 1), p.scoped("td.up4"));
  const Var<T> t3 = msgrb(merge(p3, up4, p.scoped("td.merge3")), neck_fuse_config(cfg, 0),
                          p.scoped("td.fuse3"));

  const Var<T> d3 = ldconv(t3, neck_down_config(cfg, 0), p.scoped("bu.down3"));
  const Var<T> o4 = msgrb(merge(t4, d3, p.scoped("bu.merge4")), neck_fuse_config(cfg, 1),
                          p.scoped("bu.fuse4"));
  const Var<T> d4 = ldconv(o4, neck_down_config(cfg, 1), p.scoped("bu.down4"));
  const Var<T> o5 = msgrb(merge(p5, d4, p.scoped("bu.merge5")), neck_fuse_config(cfg, 2),
                          p.scoped("bu.fuse5"));
  return {t3, o4, o5};
}

template <class T>
std::vector<Tensor<T>> ca2neck_forward(const std::vector<Tensor<T>>& levels,
                                       const NeckConfig& cfg, const ParamStore<T>& params) {
  neck_validate(cfg, params);
  Tape<T> tape;
  std::vector<Var<T>> inputs;
  for (const auto& l : levels) inputs.push_back(tape.constant(l));
  std::vector<Tensor<T>> out;
  for (const auto& v : ca2neck(inputs, cfg, bind_constant(tape, params))) out.push_back(v.value());
  return out;
}

#define SEP_INSTANTIATE_CA2NECK(T)                                                                 \
  template ParamStore<T> ldconv_init(const LdconvConfig&, Rng&, Init);                             \
  template void ldconv_validate(const LdconvConfig&, const ParamStore<T>&);                        \
  template Index ldconv_weights_per_output(const ParamStore<T>&);                                  \
  template Var<T> ldconv_sampling(const Var<T>&, const LdconvConfig&, const ParamVars<T>&);        \
  template Var<T> ldconv(const Var<T>&, const LdconvConfig&, const ParamVars<T>&);                 \
  template Tensor<T> ldconv_forward(const Tensor<T>&, const LdconvConfig&, const ParamStore<T>&);  \
  template ParamStore<T> dysample_init(const DysampleConfig&, Rng&, Init);                         \
  template void dysample_validate(const DysampleConfig&, const ParamStore<T>&);                    \
  template Tensor<T> dysample_base_grid<T>(Index, Index, Index, Index);                            \
  template Var<T> dysample_sampling(const Var<T>&, const DysampleConfig&, const ParamVars<T>&);    \
  template Var<T> dysample(const Var<T>&, const DysampleConfig&, const ParamVars<T>&);             \
  template Tensor<T> dysample_forward(const Tensor<T>&, const DysampleConfig&,                     \
                                      const ParamStore<T>&);                                       \
  template Tensor<T> dysample_coords(const Tensor<T>&, const DysampleConfig&,                      \
                                     const ParamStore<T>&);                                        \
  template ParamStore<T> neck_init(const NeckConfig&, Rng&, Init);                                 \
  template void neck_validate(const NeckConfig&, const ParamStore<T>&);                            \
  template std::vector<Var<T>> ca2neck(const std::vector<Var<T>>&, const NeckConfig&,              \
                                       const ParamVars<T>&);                                       \
  template std::vector<Tensor<T>> ca2neck_forward(const std::vector<Tensor<T>>&, const NeckConfig&, \
                                                  const ParamStore<T>&);

SEP_INSTANTIATE_CA2NECK(float)
SEP_INSTANTIATE_CA2NECK(double)

#undef SEP_INSTANTIATE_CA2NECK

}  // namespace sep
