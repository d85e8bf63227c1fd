// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include <functional>
#include <vector>

#include "oracles.hpp"
#include "sep/gradcheck.hpp"

namespace testutil {

using namespace sep;

// Checks every parameter of a module against central differences. The loss
// projects each output on a fixed random tensor so no direction is favoured.
inline GradReport check_module(
    const std::function<std::vector<Var<double>>(const std::vector<Var<double>>&,
                                                 const ParamVars<double>&)>& fn,
    const std::vector<Tensor<double>>& inputs, const ParamStore<double>& params,
    std::uint64_t seed) {
  std::vector<Tensor<double>> proj;
  {
    Tape<double> tape;
    std::vector<Var<double>> in;
    for (const auto& t : inputs) in.push_back(tape.constant(t));
    std::uint64_t s = seed * 7919 + 1;
    for (const auto& out : fn(in, bind_constant(tape, params))) {
      proj.push_back(oracle::random<double>(out.shape(), s++));
    }
  }
  GradcheckOptions opts;
  opts.seed = seed;
  return gradcheck<double>(
      [&](Tape<double>& tape, const ParamVars<double>& p) {
        std::vector<Var<double>> in;
        for (const auto& t : inputs) in.push_back(tape.constant(t));
        const auto outs = fn(in, p);
        Var<double> loss = ad::weighted_sum(outs[0], proj[0]);
        for (std::size_t i = 1; i < outs.size(); ++i) loss = ad::add(loss, ad::weighted_sum(outs[i], proj[i]));
        return loss;
      },
      params, opts);
}

inline void expect_pass(const GradReport& r) {
  EXPECT_TRUE(r.pass());
  for (const auto& e : r.entries) {
    EXPECT_TRUE(e.pass) << e.param << " rel " << e.max_rel_err << " abs " << e.max_abs_err;
  }
}

}  // namespace testutil
