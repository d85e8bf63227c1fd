// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "config.hpp"

namespace sep::cli {

/// Parameters of every stage, stored as "<label>.<name>". Stage i draws from
/// its own generator so adding a module does not reshuffle the others.
template <class T>
ParamStore<T> build_params(const std::vector<Stage>& stages, std::uint64_t seed);

/// Runs the chain on the tape. FFT stages are rejected: they only exist for
/// benchmarking.
template <class T>
std::vector<Var<T>> run_chain(const std::vector<Stage>& stages, std::vector<Var<T>> inputs,
                              const ParamVars<T>& params);

/// Forward-only evaluation.
template <class T>
std::vector<Tensor<T>> forward_chain(const std::vector<Stage>& stages,
                                     const std::vector<Tensor<T>>& inputs,
                                     const ParamStore<T>& params);

/// Runs one stage outside of a tape, for timing.
template <class T>
void run_stage_plain(const Stage& stage, const std::vector<Tensor<T>>& inputs,
                     const ParamStore<T>& stage_params);

}  // namespace sep::cli
