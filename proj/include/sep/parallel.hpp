// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "sep/tensor.hpp"

namespace sep {

/// Worker count used by parallel_for. Defaults to 1; results never depend on it
/// because every task writes a disjoint slice of its output.
int num_threads();
void set_num_threads(int n);

template <class F>
void parallel_for(Index count, F&& fn) {
  const Index workers = std::min<Index>(num_threads(), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (Index i = t; i < count; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace sep
