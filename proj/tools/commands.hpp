// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sep::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // a property or gradient check failed
inline constexpr int kExitConfig = 2;  // bad arguments, config or input files
inline constexpr int kExitShape = 3;
inline constexpr int kExitNumeric = 4;

struct Options {
  std::string config;
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  std::string filter;
  int repeats = 5;
  std::optional<int> threads;
  std::string inject_fault;
};

/// Each command prints its JSON report to `out` and diagnostics to `err`, and
/// returns the process exit code. Errors never escape as exceptions.
int cmd_forward(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_props(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace sep::cli
