// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Registry of seeded invariant checks, grouped into suites that mirror the
// library modules. Every property is deterministic for a given seed.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sep {

struct PropResult {
  std::string suite;
  std::string property;
  std::uint64_t seed = 0;
  bool pass = false;
  /// The quantity compared against the property's threshold (an error, a
  /// count of violations, ...). NaN when the property threw.
  double metric = 0.0;
  std::string error;

  /// {suite, property, seed, pass, metric}
  std::string to_json() const;
};

/// Suite names in run order.
std::vector<std::string> prop_suites();

/// Runs every property of `suite` (all suites when empty). A property that
/// throws is recorded as a failure and the run continues. Throws
/// ArgumentError for an unknown suite name.
std::vector<PropResult> run_props(const std::string& suite, std::uint64_t seed,
                                  const std::function<void(const PropResult&)>& on_result = {});

}  // namespace sep
