// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace sep::cli;
  CLI::App app{"sep: spectral and point-sampling feature operators"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for parameters and inputs");
    cmd->add_option("--threads", opts.threads, "Worker threads (default: SEP_THREADS, else 1)");
    cmd->add_option("--inject-fault", opts.inject_fault)->group("");
  };

  auto* forward = app.add_subcommand("forward", "Run a module chain on an input tensor");
  forward->add_option("--config", opts.config, "Graph config file")->required();
  forward->add_option("--input", opts.input, "Input .sept file, or a directory of level0/1/2.sept")->required();
  forward->add_option("--output", opts.output, "Where to write the result");
  add_common(forward);

  auto* props = app.add_subcommand("props", "Run the invariant property suites");
  props->add_option("--filter", opts.filter, "Only run this suite");
  add_common(props);

  auto* gradcheck = app.add_subcommand("gradcheck", "Check every chain gradient against central differences");
  gradcheck->add_option("--config", opts.config, "Graph config file")->required();
  gradcheck->add_option("--input", opts.input, "Input tensor (default: seeded random)");
  add_common(gradcheck);

  auto* bench = app.add_subcommand("bench", "Time each configured module");
  bench->add_option("--config", opts.config, "Graph config file")->required();
  bench->add_option("--repeats", opts.repeats, "Timed repeats after one warmup (>= 3)");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (auto* cmd : {forward, props, gradcheck, bench}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) opts.seed = seed;
  }
  if (forward->parsed()) return cmd_forward(opts, std::cout, std::cerr);
  if (props->parsed()) return cmd_props(opts, std::cout, std::cerr);
  if (gradcheck->parsed()) return cmd_gradcheck(opts, std::cout, std::cerr);
  return cmd_bench(opts, std::cout, std::cerr);
}
