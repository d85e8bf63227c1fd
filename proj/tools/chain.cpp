// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "chain.hpp"

#include "sep/io.hpp"

namespace sep::cli {

namespace {

Init init_of(ParamSource s) {
  switch (s) {
    case ParamSource::Random:
      return Init::Random;
    case ParamSource::Zeros:
      return Init::Zeros;
    default:
      return Init::Fresh;
  }
}

template <class T>
struct StageParams {
  const Stage& stage;
  Rng& rng;

  ParamStore<T> operator()(const FddemConfig& c) const { return make(c, fddem_init<T>, fddem_validate<T>); }
  ParamStore<T> operator()(const MsgrbConfig& c) const { return make(c, msgrb_init<T>, msgrb_validate<T>); }
  ParamStore<T> operator()(const LdconvConfig& c) const { return make(c, ldconv_init<T>, ldconv_validate<T>); }
  ParamStore<T> operator()(const DysampleConfig& c) const {
    return make(c, dysample_init<T>, dysample_validate<T>);
  }
  ParamStore<T> operator()(const NeckConfig& c) const { return make(c, neck_init<T>, neck_validate<T>); }
  ParamStore<T> operator()(const FftStage&) const { return {}; }

  template <class C, class InitFn, class ValidateFn>
  ParamStore<T> make(const C& c, InitFn init, ValidateFn validate) const {
    if (stage.source == ParamSource::File) {
      ParamStore<T> p = io::load_params<T>(stage.params_file);
      validate(c, p);
      return p;
    }
    return init(c, rng, init_of(stage.source));
  }
};

template <class T>
struct StageRun {
  const std::vector<Var<T>>& in;
  const ParamVars<T>& p;

  std::vector<Var<T>> operator()(const FddemConfig& c) const { return {fddem(in.front(), c, p)}; }
  std::vector<Var<T>> operator()(const MsgrbConfig& c) const { return {msgrb(in.front(), c, p)}; }
  std::vector<Var<T>> operator()(const LdconvConfig& c) const { return {ldconv(in.front(), c, p)}; }
  std::vector<Var<T>> operator()(const DysampleConfig& c) const { return {dysample(in.front(), c, p)}; }
  std::vector<Var<T>> operator()(const NeckConfig& c) const { return ca2neck(in, c, p); }
  std::vector<Var<T>> operator()(const FftStage&) const {
    throw ArgumentError("fft2 is a benchmark-only module and cannot run in a chain");
  }
};

}  // namespace

template <class T>
ParamStore<T> build_params(const std::vector<Stage>& stages, std::uint64_t seed) {
  ParamStore<T> all;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * (i + 1)));
    all.merge(stages[i].label, std::visit(StageParams<T>{stages[i], rng}, stages[i].config));
  }
  return all;
}

template <class T>
std::vector<Var<T>> run_chain(const std::vector<Stage>& stages, std::vector<Var<T>> inputs,
                              const ParamVars<T>& params) {
  for (const auto& st : stages) {
    const ParamVars<T> scoped = params.scoped(st.label);
    inputs = std::visit(StageRun<T>{inputs, scoped}, st.config);
  }
  return inputs;
}

template <class T>
std::vector<Tensor<T>> forward_chain(const std::vector<Stage>& stages,
                                     const std::vector<Tensor<T>>& inputs,
                                     const ParamStore<T>& params) {
  Tape<T> tape;
  std::vector<Var<T>> in;
  for (const auto& t : inputs) in.push_back(tape.constant(t));
  std::vector<Tensor<T>> out;
  for (const auto& v : run_chain(stages, std::move(in), bind_constant(tape, params))) {
    out.push_back(v.value());
  }
  return out;
}

template <class T>
void run_stage_plain(const Stage& stage, const std::vector<Tensor<T>>& inputs,
                     const ParamStore<T>& stage_params) {
  if (const auto* fft = std::get_if<FftStage>(&stage.config)) {
    fft2(inputs.front(), fft->path);
    return;
  }
  ParamStore<T> prefixed;
  prefixed.merge(stage.label, stage_params);
  forward_chain<T>({stage}, inputs, prefixed);
}

#define SEP_INSTANTIATE_CHAIN(T)                                                                   \
  template ParamStore<T> build_params<T>(const std::vector<Stage>&, std::uint64_t);                \
  template std::vector<Var<T>> run_chain(const std::vector<Stage>&, std::vector<Var<T>>,           \
                                         const ParamVars<T>&);                                     \
  template std::vector<Tensor<T>> forward_chain(const std::vector<Stage>&,                         \
                                                const std::vector<Tensor<T>>&, const ParamStore<T>&); \
  template void run_stage_plain(const Stage&, const std::vector<Tensor<T>>&, const ParamStore<T>&);

SEP_INSTANTIATE_CHAIN(float)
SEP_INSTANTIATE_CHAIN(double)

#undef SEP_INSTANTIATE_CHAIN

}  // namespace sep::cli
