// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>

#include "sep/param_store.hpp"
#include "sep/rng.hpp"

namespace sep {

enum class Init {
  Fresh,   // the documented starting point of each module
  Random,  // every tensor drawn from the seeded generator
  Zeros,
};

enum class ZeroWhenFresh { No, Yes };

/// N(0, gain / sqrt(fan_in)) weights; zero under Init::Zeros, and under
/// Init::Fresh when the tensor is one of the zero-initialized projections.
template <class T>
Tensor<T> init_conv_weight(const Shape& shape, Rng& rng, Init init,
                           ZeroWhenFresh zero = ZeroWhenFresh::No, double gain = 1.0) {
  if (init == Init::Zeros || (init == Init::Fresh && zero == ZeroWhenFresh::Yes)) {
    return Tensor<T>(shape);
  }
  const double fan_in = static_cast<double>(shape.c * shape.h * shape.w);
  return randn<T>(shape, rng, gain / std::sqrt(fan_in));
}

/// (1, C, 1, 1) bias: zero unless Init::Random.
template <class T>
Tensor<T> init_bias(Index channels, Rng& rng, Init init, double stddev = 0.1) {
  const Shape s{1, channels, 1, 1};
  if (init != Init::Random) return Tensor<T>(s);
  return randn<T>(s, rng, stddev);
}

template <class T>
void expect_shape(const ParamStore<T>& params, const std::string& name, const Shape& shape) {
  if (!params.contains(name)) throw DimensionError("missing parameter '" + name + "'");
  const Shape& got = params.at(name).shape();
  if (got != shape) {
    throw DimensionError("parameter '" + name + "' has shape " + got.str() + ", expected " +
                         shape.str());
  }
}

}  // namespace sep
