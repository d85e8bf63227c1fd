// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Graph configuration files.
//
//   # comment
//   [global]
//   seed  = 42
//   dtype = f64
//   input = 1x4x8x8                       ; pyramids: 1x4x8x8, 1x8x4x4, 1x16x2x2
//
//   [module msgrb]
//   kernels = 3,5,7
//   params  = random                      ; init | random | zeros | file:PATH
//
// Sections are case-sensitive; keys are `name = value`, one per line; text
// after '#' or ';' is ignored. Module sections run in file order.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sep/ca2neck.hpp"
#include "sep/fddem.hpp"
#include "sep/msgrb.hpp"
#include "sep/spectral.hpp"

namespace sep::cli {

enum class ParamSource { Init, Random, Zeros, File };

struct ModuleSection {
  std::string kind;
  int line = 0;
  std::map<std::string, std::string> keys;
};

struct GraphConfig {
  std::optional<std::uint64_t> seed;
  std::optional<DType> dtype;
  std::vector<Shape> inputs;
  std::vector<ModuleSection> modules;
  std::filesystem::path base_dir;
};

/// Throws ArgumentError with a line number on any syntax problem.
GraphConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
GraphConfig load_config(const std::filesystem::path& path);

/// "1x4x8x8" -> Shape; "a, b, c" -> three shapes.
Shape parse_shape(const std::string& text);
std::vector<Shape> parse_shapes(const std::string& text);

/// Spectral transform timed by `bench`; not usable in a forward chain.
struct FftStage {
  FftPath path = FftPath::Auto;
};

using StageConfig =
    std::variant<FddemConfig, MsgrbConfig, LdconvConfig, DysampleConfig, NeckConfig, FftStage>;

struct Stage {
  std::string kind;
  /// Unique parameter prefix: the kind, with a counter from the second use on.
  std::string label;
  StageConfig config;
  ParamSource source = ParamSource::Init;
  std::filesystem::path params_file;
  std::vector<Shape> in;
  std::vector<Shape> out;
};

/// Checks every module section against the shapes flowing through the chain.
/// Bad keys or values throw ArgumentError; channel or size disagreements
/// between the input, the declared hyperparameters and adjacent modules throw
/// DimensionError.
std::vector<Stage> resolve(const GraphConfig& cfg, const std::vector<Shape>& inputs);

}  // namespace sep::cli
