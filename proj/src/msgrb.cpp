// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/msgrb.hpp"

#include <cmath>
#include <string>

#include "sep/init.hpp"
#include "sep/ops.hpp"

namespace sep {

namespace {

std::string dw_name(Index k) { return "dw" + std::to_string(k) + ".weight"; }

void check_config(const MsgrbConfig& cfg) {
  if (cfg.channels < 1) throw ArgumentError("msgrb: channels must be >= 1");
  if (cfg.kernels.empty()) throw ArgumentError("msgrb: need at least one depthwise kernel size");
  for (Index k : cfg.kernels) {
    if (k < 1 || k % 2 == 0) throw ArgumentError("msgrb: kernel sizes must be odd, got " + std::to_string(k));
  }
}

}  // namespace

template <class T>
ParamStore<T> msgrb_init(const MsgrbConfig& cfg, Rng& rng, Init init) {
  check_config(cfg);
  const Index c = cfg.channels;
  const Index h = cfg.hidden();
  ParamStore<T> p;
  p.set("expand.weight", init_conv_weight<T>(Shape{2 * h, c, 1, 1}, rng, init));
  p.set("expand.bias", init_bias<T>(2 * h, rng, init));
  for (Index k : cfg.kernels) {
    p.set(dw_name(k), init_conv_weight<T>(Shape{h, 1, k, k}, rng, init));
  }
  p.set("shrink.weight", init_conv_weight<T>(Shape{c, h, 1, 1}, rng, init, ZeroWhenFresh::Yes));
  return p;
}

template <class T>
void msgrb_validate(const MsgrbConfig& cfg, const ParamStore<T>& params) {
  check_config(cfg);
  const Index c = cfg.channels;
  const Index h = cfg.hidden();
  expect_shape(params, "expand.weight", Shape{2 * h, c, 1, 1});
  expect_shape(params, "expand.bias", Shape{1, 2 * h, 1, 1});
  for (Index k : cfg.kernels) expect_shape(params, dw_name(k), Shape{h, 1, k, k});
  expect_shape(params, "shrink.weight", Shape{c, h, 1, 1});
}

template <class T>
Tensor<T> msdwconv(const Tensor<T>& x, const std::vector<Tensor<T>>& kernels) {
  if (kernels.empty()) throw ArgumentError("msdwconv: need at least one kernel");
  Tensor<T> y = depthwise_conv2d(x, kernels.front(), kernels.front().shape().h / 2);
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    y = add(y, depthwise_conv2d(x, kernels[i], kernels[i].shape().h / 2));
  }
  return y;
}

template <class T>
Var<T> msdwconv(const Var<T>& x, const std::vector<Var<T>>& kernels) {
  if (kernels.empty()) throw ArgumentError("msdwconv: need at least one kernel");
  Var<T> y = ad::depthwise_conv2d(x, kernels.front(), kernels.front().shape().h / 2);
  for (std::size_t i = 1; i < kernels.size(); ++i) {
    y = ad::add(y, ad::depthwise_conv2d(x, kernels[i], kernels[i].shape().h / 2));
  }
  return y;
}

template <class T>
Var<T> ms_gu(const Var<T>& x, const MsgrbConfig& cfg, const ParamVars<T>& p) {
  if (x.shape().c != cfg.channels) {
    throw DimensionError("msgrb: input has " + std::to_string(x.shape().c) + " channels, block expects " +
                         std::to_string(cfg.channels));
  }
  const Index h = cfg.hidden();
  const Var<T> expanded = ad::conv2d(x, p["expand.weight"], std::optional<Var<T>>(p["expand.bias"]), 1, 0);
  const auto halves = ad::split_channels(expanded, {h, h});
  std::vector<Var<T>> kernels;
  for (Index k : cfg.kernels) kernels.push_back(p[dw_name(k)]);
  const Var<T> context = msdwconv(ad::gelu(halves[0]), kernels);
  const Var<T> gated = ad::mul(context, ad::sigmoid(halves[1]));
  return ad::conv2d(gated, p["shrink.weight"], std::optional<Var<T>>(), 1, 0);
}

template <class T>
Var<T> msgrb(const Var<T>& x, const MsgrbConfig& cfg, const ParamVars<T>& p) {
  return ad::add(x, ms_gu(x, cfg, p));
}

template <class T>
Tensor<T> ms_gu_forward(const Tensor<T>& x, const MsgrbConfig& cfg, const ParamStore<T>& params) {
  msgrb_validate(cfg, params);
  Tape<T> tape;
  return ms_gu(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

template <class T>
Tensor<T> msgrb_forward(const Tensor<T>& x, const MsgrbConfig& cfg, const ParamStore<T>& params) {
  msgrb_validate(cfg, params);
  Tape<T> tape;
  return msgrb(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

#define SEP_INSTANTIATE_MSGRB(T)                                                               \
  template ParamStore<T> msgrb_init(const MsgrbConfig&, Rng&, Init);                           \
  template void msgrb_validate(const MsgrbConfig&, const ParamStore<T>&);                      \
  template Tensor<T> msdwconv(const Tensor<T>&, const std::vector<Tensor<T>>&);                \
  template Var<T> msdwconv(const Var<T>&, const std::vector<Var<T>>&);                         \
  template Var<T> ms_gu(const Var<T>&, const MsgrbConfig&, const ParamVars<T>&);               \
  template Var<T> msgrb(const Var<T>&, const MsgrbConfig&, const ParamVars<T>&);               \
  template Tensor<T> ms_gu_forward(const Tensor<T>&, const MsgrbConfig&, const ParamStore<T>&); \
  template Tensor<T> msgrb_forward(const Tensor<T>&, const MsgrbConfig&, const ParamStore<T>&);

SEP_INSTANTIATE_MSGRB(float)
SEP_INSTANTIATE_MSGRB(double)

#undef SEP_INSTANTIATE_MSGRB

}  // namespace sep
