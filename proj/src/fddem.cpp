// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/fddem.hpp"

#include <string>

namespace sep {

namespace {

std::string branch_name(Index i, const char* part) {
  return "freq.w" + std::to_string(i) + "." + part;
}

void check_config(const FddemConfig& cfg) {
  if (cfg.channels < 1 || cfg.height < 1 || cfg.width < 1) {
    throw ArgumentError("fddem: channels, height and width must be >= 1");
  }
  if (cfg.branches < 1) throw ArgumentError("fddem: need at least one frequency branch");
  if (cfg.reduction < 1) throw ArgumentError("fddem: reduction ratio must be >= 1");
  if (cfg.channels < cfg.reduction) {
    throw DimensionError("fddem: channel count " + std::to_string(cfg.channels) +
                         " is smaller than the attention reduction ratio " +
                         std::to_string(cfg.reduction));
  }
}

template <class T>
void validate_attention(const ParamStore<T>& params, const std::string& prefix, Index channels,
                        Index hidden) {
  expect_shape(params, prefix + "fc1.weight", Shape{hidden, channels, 1, 1});
  expect_shape(params, prefix + "fc2.weight", Shape{channels, hidden, 1, 1});
  expect_shape(params, prefix + "spatial.weight", Shape{1, 2, 7, 7});
  expect_shape(params, prefix + "spatial.bias", Shape{1, 1, 1, 1});
}

template <class T>
Var<T> channel_mlp(const Var<T>& pooled, const ParamVars<T>& p) {
  const std::optional<Var<T>> no_bias;
  return ad::conv2d(ad::gelu(ad::conv2d(pooled, p["fc1.weight"], no_bias, 1, 0)), p["fc2.weight"],
                    no_bias, 1, 0);
}

}  // namespace

template <class T>
ParamStore<T> fddem_init(const FddemConfig& cfg, Rng& rng, Init init) {
  check_config(cfg);
  const Index c = cfg.channels;
  ParamStore<T> p;
  p.set("spatial.conv1.weight", init_conv_weight<T>(Shape{c, c, 3, 3}, rng, init));
  p.set("spatial.conv1.bias", init_bias<T>(c, rng, init));
  p.set("spatial.conv2.weight", init_conv_weight<T>(Shape{c, c, 3, 3}, rng, init, ZeroWhenFresh::Yes));
  p.set("spatial.conv2.bias", init_bias<T>(c, rng, init));
  const Shape spectrum{1, c, cfg.height, cfg.width};
  for (Index i = 0; i < cfg.branches; ++i) {
    switch (init) {
      case Init::Fresh: {
        auto w = ComplexWeights<T>::identity(c, cfg.height, cfg.width);
        p.set(branch_name(i, "re"), std::move(w.re));
        p.set(branch_name(i, "im"), std::move(w.im));
        break;
      }
      case Init::Random: {
        Tensor<T> re = randn<T>(spectrum, rng, 0.3);
        re.array() += T(1);
        p.set(branch_name(i, "re"), std::move(re));
        p.set(branch_name(i, "im"), randn<T>(spectrum, rng, 0.3));
        break;
      }
      case Init::Zeros:
        p.set(branch_name(i, "re"), Tensor<T>(spectrum));
        p.set(branch_name(i, "im"), Tensor<T>(spectrum));
        break;
    }
  }
  p.set("compress.weight",
        init_conv_weight<T>(Shape{c, cfg.branches * c, 1, 1}, rng, init, ZeroWhenFresh::Yes));
  p.set("compress.bias", init_bias<T>(c, rng, init));
  const Index hidden = cfg.attention_hidden();
  p.set("attn.fc1.weight", init_conv_weight<T>(Shape{hidden, c, 1, 1}, rng, init));
  p.set("attn.fc2.weight", init_conv_weight<T>(Shape{c, hidden, 1, 1}, rng, init));
  p.set("attn.spatial.weight", init_conv_weight<T>(Shape{1, 2, 7, 7}, rng, init));
  p.set("attn.spatial.bias", init_bias<T>(1, rng, init));
  return p;
}

template <class T>
void fddem_validate(const FddemConfig& cfg, const ParamStore<T>& params) {
  check_config(cfg);
  const Index c = cfg.channels;
  for (const char* conv : {"spatial.conv1", "spatial.conv2"}) {
    expect_shape(params, std::string(conv) + ".weight", Shape{c, c, 3, 3});
    expect_shape(params, std::string(conv) + ".bias", Shape{1, c, 1, 1});
  }
  const Shape spectrum{1, c, cfg.height, cfg.width};
  for (Index i = 0; i < cfg.branches; ++i) {
    expect_shape(params, branch_name(i, "re"), spectrum);
    expect_shape(params, branch_name(i, "im"), spectrum);
  }
  expect_shape(params, "compress.weight", Shape{c, cfg.branches * c, 1, 1});
  expect_shape(params, "compress.bias", Shape{1, c, 1, 1});
  validate_attention(params, "attn.", c, cfg.attention_hidden());
}

template <class T>
Var<T> dual_attention(const Var<T>& f, const ParamVars<T>& p) {
  const Var<T> channel_logits =
      ad::add(channel_mlp(ad::global_avg_pool(f), p), channel_mlp(ad::global_max_pool(f), p));
  const Var<T> refined = ad::mul(f, ad::sigmoid(channel_logits));
  const Var<T> maps = ad::concat_channels<T>({ad::channel_mean(refined), ad::channel_max(refined)});
  const Var<T> spatial_logits =
      ad::conv2d(maps, p["spatial.weight"], std::optional<Var<T>>(p["spatial.bias"]), 1, 3);
  return ad::sigmoid(ad::add(channel_logits, spatial_logits));
}

template <class T>
Var<T> fddem(const Var<T>& x, const FddemConfig& cfg, const ParamVars<T>& p) {
  const Shape& s = x.shape();
  if (s.c != cfg.channels || s.h != cfg.height || s.w != cfg.width) {
    throw DimensionError("fddem: input " + s.str() + " does not match configured (C,H,W) = (" +
                         std::to_string(cfg.channels) + "," + std::to_string(cfg.height) + "," +
                         std::to_string(cfg.width) + ")");
  }
  const Var<T> hidden = ad::gelu(
      ad::conv2d(x, p["spatial.conv1.weight"], std::optional<Var<T>>(p["spatial.conv1.bias"]), 1, 1));
  const Var<T> spatial = ad::add(
      x, ad::conv2d(hidden, p["spatial.conv2.weight"], std::optional<Var<T>>(p["spatial.conv2.bias"]), 1, 1));

  const ComplexVar<T> spectrum = ad::fft2(x);
  std::vector<Var<T>> branches;
  for (Index i = 0; i < cfg.branches; ++i) {
    const ComplexVar<T> w{p[branch_name(i, "re")], p[branch_name(i, "im")]};
    branches.push_back(ad::ifft2(ad::modulate(spectrum, w)));
  }
  const Var<T> f = ad::conv2d(ad::concat_channels(branches), p["compress.weight"],
                              std::optional<Var<T>>(p["compress.bias"]), 1, 0);
  return ad::add(spatial, ad::mul(dual_attention(f, p.scoped("attn")), f));
}

template <class T>
Tensor<T> dual_attention(const Tensor<T>& f, Index reduction, const ParamStore<T>& attn_params) {
  if (reduction < 1) throw ArgumentError("dual_attention: reduction ratio must be >= 1");
  if (f.shape().c < reduction) {
    throw DimensionError("dual_attention: channel count " + std::to_string(f.shape().c) +
                         " is smaller than the reduction ratio " + std::to_string(reduction));
  }
  validate_attention(attn_params, "", f.shape().c, f.shape().c / reduction);
  Tape<T> tape;
  return dual_attention(tape.constant(f), bind_constant(tape, attn_params)).value();
}

template <class T>
Tensor<T> fddem_forward(const Tensor<T>& x, const FddemConfig& cfg, const ParamStore<T>& params) {
  fddem_validate(cfg, params);
  Tape<T> tape;
  return fddem(tape.constant(x), cfg, bind_constant(tape, params)).value();
}

template <class T>
std::vector<ComplexWeights<T>> fddem_branch_weights(const FddemConfig& cfg,
                                                    const ParamStore<T>& params) {
  std::vector<ComplexWeights<T>> out;
  for (Index i = 0; i < cfg.branches; ++i) {
    out.push_back({params.at(branch_name(i, "re")), params.at(branch_name(i, "im"))});
  }
  return out;
}

#define SEP_INSTANTIATE_FDDEM(T)                                                                \
  template ParamStore<T> fddem_init(const FddemConfig&, Rng&, Init);                            \
  template void fddem_validate(const FddemConfig&, const ParamStore<T>&);                       \
  template Var<T> dual_attention(const Var<T>&, const ParamVars<T>&);                           \
  template Var<T> fddem(const Var<T>&, const FddemConfig&, const ParamVars<T>&);                \
  template Tensor<T> dual_attention(const Tensor<T>&, Index, const ParamStore<T>&);             \
  template Tensor<T> fddem_forward(const Tensor<T>&, const FddemConfig&, const ParamStore<T>&); \
  template std::vector<ComplexWeights<T>> fddem_branch_weights(const FddemConfig&,              \
                                                               const ParamStore<T>&);

SEP_INSTANTIATE_FDDEM(float)
SEP_INSTANTIATE_FDDEM(double)

#undef SEP_INSTANTIATE_FDDEM

}  // namespace sep
