// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sep/autodiff.hpp"

namespace sep {

struct GradEntry {
  std::string param;
  double max_abs_err = 0.0;
  /// |a - n| / max(|a|, |n|, 1e-12), maximised over checked coordinates.
  double max_rel_err = 0.0;
  /// Cosine between the analytic and numeric gradient over checked coordinates.
  double cosine = 1.0;
  Index checked = 0;
  bool pass = true;
};

struct GradReport {
  std::vector<GradEntry> entries;
  double eps = 0.0;
  double tol = 0.0;
  std::uint64_t seed = 0;

  bool pass() const {
    for (const auto& e : entries) {
      if (!e.pass) return false;
    }
    return true;
  }

  /// One JSON object per parameter: {param, max_abs_err, max_rel_err, cosine, pass}.
  std::vector<std::string> json_lines() const;
  /// Whole report as a single JSON document.
  std::string to_json() const;
};

struct GradcheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  /// Parameters with more scalars than this are checked on a seeded random
  /// subsample of this many coordinates (never fewer than 64).
  Index max_coords = 256;
  std::uint64_t seed = 0;
};

/// Builds the scalar loss on the given tape from the bound parameters.
template <class T>
using LossFn = std::function<Var<T>(Tape<T>&, const ParamVars<T>&)>;

/// Compares tape gradients against central differences
/// (f(p + eps) - f(p - eps)) / (2 eps) for every parameter in `params`.
/// Tolerance failures are reported, not thrown; a non-finite loss throws
/// NumericError.
template <class T>
GradReport gradcheck(const LossFn<T>& loss, ParamStore<T> params, const GradcheckOptions& opts);

}  // namespace sep
