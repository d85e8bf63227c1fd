// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <ostream>
#include <sstream>

#include "chain.hpp"
#include "config.hpp"
#include "sep/gradcheck.hpp"
#include "sep/io.hpp"
#include "sep/json.hpp"
#include "sep/parallel.hpp"
#include "sep/props.hpp"

namespace sep::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string shape_json(const Shape& s) {
  return "[" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + "]";
}

// A single shape for plain tensors, a list of shapes for pyramids.
std::string shapes_json(const std::vector<Shape>& shapes) {
  if (shapes.size() == 1) return shape_json(shapes.front());
  std::vector<std::string> items;
  for (const auto& s : shapes) items.push_back(shape_json(s));
  return json::array(items);
}

// Resets process-wide state changed by a command when it returns.
class CommandScope {
 public:
  explicit CommandScope(const Options& opts) : threads_(num_threads()) {
    int n = 1;
    if (opts.threads) {
      n = *opts.threads;
    } else if (const char* env = std::getenv("SEP_THREADS"); env != nullptr && *env != '\0') {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (*end != '\0') throw ArgumentError(std::string("SEP_THREADS is not an integer: '") + env + "'");
      n = static_cast<int>(v);
    }
    if (n < 1) throw ArgumentError("thread count must be >= 1, got " + std::to_string(n));
    set_num_threads(n);
    if (opts.inject_fault == "modulate-sign") {
      testing::inject_fault(testing::Fault::ModulateSign);
    } else if (!opts.inject_fault.empty()) {
      throw ArgumentError("unknown fault '" + opts.inject_fault + "'");
    }
  }
  ~CommandScope() {
    set_num_threads(threads_);
    testing::inject_fault(testing::Fault::None);
  }
  CommandScope(const CommandScope&) = delete;
  CommandScope& operator=(const CommandScope&) = delete;

 private:
  int threads_;
};

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const DimensionError& e) {
    err << "shape error: " << e.what() << "\n";
    return kExitShape;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ArgumentError& e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "bad input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

std::uint64_t pick_seed(const Options& opts, const GraphConfig& cfg) {
  return opts.seed ? *opts.seed : cfg.seed.value_or(0);
}


std::vector<io::AnyTensor> read_inputs(const fs::path& path) {
  if (path.empty()) throw ArgumentError("--input is required");
  std::vector<io::AnyTensor> out;
  if (fs::is_directory(path)) {
    for (int l = 0; l < 3; ++l) {
      const fs::path level = path / ("level" + std::to_string(l) + ".sept");
      if (!fs::exists(level)) throw ArgumentError("missing pyramid level file '" + level.string() + "'");
      out.push_back(io::load_any_tensor(level));
    }
  } else {
    if (!fs::exists(path)) throw ArgumentError("input file '" + path.string() + "' does not exist");
    out.push_back(io::load_any_tensor(path));
  }
  return out;
}

template <class T>
std::string serialize(const Tensor<T>& t) {
  std::ostringstream buf(std::ios::binary);
  io::write_tensor(buf, t);
  return buf.str();
}

template <class T>
void write_outputs(const fs::path& path, const std::vector<Tensor<T>>& outputs) {
  if (path.empty()) return;
  if (outputs.size() == 1) {
    io::write_file_atomic(path, serialize(outputs.front()));
    return;
  }
  std::vector<std::string> blobs;
  for (const auto& t : outputs) blobs.push_back(serialize(t));
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw ArgumentError("cannot create output directory '" + path.string() + "': " + ec.message());
  for (std::size_t l = 0; l < blobs.size(); ++l) {
    io::write_file_atomic(path / ("level" + std::to_string(l) + ".sept"), blobs[l]);
  }
}

template <class T>
int forward_as(const Options& opts, const GraphConfig& cfg, const std::vector<io::AnyTensor>& raw,
               std::ostream& out) {
  std::vector<Tensor<T>> inputs;
  std::vector<Shape> shapes;
  for (const auto& r : raw) {
    inputs.push_back(io::as_dtype<T>(r));
    shapes.push_back(inputs.back().shape());
  }
  if (!cfg.inputs.empty() && cfg.inputs != shapes) {
    throw DimensionError("input file shapes do not match the shapes declared in [global] input");
  }
  const std::uint64_t seed = pick_seed(opts, cfg);
  const auto stages = resolve(cfg, shapes);
  const ParamStore<T> params = build_params<T>(stages, seed);

  const auto t0 = Clock::now();
  const std::vector<Tensor<T>> outputs = forward_chain(stages, inputs, params);
  const double wall = ms_since(t0);

  double lo = INFINITY;
  double hi = -INFINITY;
  double sum = 0.0;
  double sq = 0.0;
  double count = 0.0;
  std::vector<Shape> out_shapes;
  for (const auto& t : outputs) {
    out_shapes.push_back(t.shape());
    for (T v : t.values()) {
      const auto d = static_cast<double>(v);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      sum += d;
      sq += d * d;
      count += 1.0;
    }
  }
  write_outputs(opts.output, outputs);
  out << json::Object()
             .raw("shape", shapes_json(out_shapes))
             .field("min", lo)
             .field("max", hi)
             .field("mean", sum / count)
             .field("l2", std::sqrt(sq))
             .field("wall_ms", wall)
             .field("seed", seed)
             .str()
      << "\n";
  return kExitOk;
}

std::vector<Shape> declared_inputs(const GraphConfig& cfg) {
  if (cfg.inputs.empty()) throw ArgumentError("[global] input shape is required for this command");
  return cfg.inputs;
}

std::uint64_t input_seed(std::uint64_t seed) { return seed ^ 0xd1b54a32d192ed03ULL; }

template <class T>
std::vector<Tensor<T>> random_inputs(const std::vector<Shape>& shapes, Rng& rng) {
  std::vector<Tensor<T>> out;
  for (const auto& s : shapes) out.push_back(randn<T>(s, rng));
  return out;
}

template <class T>
int bench_as(const Options& opts, const GraphConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = pick_seed(opts, cfg);
  const auto stages = resolve(cfg, declared_inputs(cfg));
  const ParamStore<T> params = build_params<T>(stages, seed);
  Rng rng(input_seed(seed));

  std::vector<std::string> records;
  for (const auto& st : stages) {
    const auto inputs = random_inputs<T>(st.in, rng);
    const ParamStore<T> own = params.scoped(st.label);
    run_stage_plain(st, inputs, own);  // warmup
    std::vector<double> times;
    for (int r = 0; r < opts.repeats; ++r) {
      const auto t0 = Clock::now();
      run_stage_plain(st, inputs, own);
      times.push_back(ms_since(t0));
    }
    std::sort(times.begin(), times.end());
    const std::size_t mid = times.size() / 2;
    const double median = times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    json::Object rec;
    rec.field("module", st.label).field("median_ms", median).field("min_ms", times.front());
    rec.raw("input_shape", shapes_json(st.in));
    if (const auto* fft = std::get_if<FftStage>(&st.config)) {
      rec.field("path", fft->path == FftPath::Fast ? "fast" : fft->path == FftPath::Naive ? "naive" : "auto");
    }
    records.push_back(rec.str());
  }
  out << json::Object()
             .field("seed", seed)
             .field("dtype", dtype_name(dtype_of<T>()))
             .field("repeats", opts.repeats)
             .field("threads", num_threads())
             .raw("records", json::array(records))
             .str()
      << "\n";
  return kExitOk;
}

}  // namespace

int cmd_forward(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        CommandScope scope(opts);
        if (opts.config.empty()) throw ArgumentError("--config is required");
        const GraphConfig cfg = load_config(opts.config);
        const auto raw = read_inputs(opts.input);
        const DType dtype = cfg.dtype.value_or(io::dtype_of_any(raw.front()));
        return dtype == DType::F32 ? forward_as<float>(opts, cfg, raw, out)
                                   : forward_as<double>(opts, cfg, raw, out);
      },
      err);
}

int cmd_props(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        CommandScope scope(opts);
        bool all_pass = true;
        run_props(opts.filter, opts.seed.value_or(0), [&](const PropResult& r) {
          out << r.to_json() << "\n";
          if (!r.error.empty()) err << r.suite << "/" << r.property << ": " << r.error << "\n";
          all_pass = all_pass && r.pass;
        });
        return all_pass ? kExitOk : kExitFailed;
      },
      err);
}

int cmd_gradcheck(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        CommandScope scope(opts);
        if (opts.config.empty()) throw ArgumentError("--config is required");
        const GraphConfig cfg = load_config(opts.config);
        const std::uint64_t seed = pick_seed(opts, cfg);
        Rng rng(input_seed(seed));
        std::vector<Tensor<double>> inputs;
        if (!opts.input.empty()) {
          for (const auto& r : read_inputs(opts.input)) inputs.push_back(io::as_dtype<double>(r));
        } else {
          inputs = random_inputs<double>(declared_inputs(cfg), rng);
        }
        std::vector<Shape> shapes;
        for (const auto& t : inputs) shapes.push_back(t.shape());
        const auto stages = resolve(cfg, shapes);
        const ParamStore<double> params = build_params<double>(stages, seed);

        std::vector<Tensor<double>> projections;
        for (const auto& s : stages.back().out) projections.push_back(randn<double>(s, rng));
        const LossFn<double> loss = [&](Tape<double>& tape, const ParamVars<double>& p) {
          std::vector<Var<double>> in;
          for (const auto& t : inputs) in.push_back(tape.constant(t));
          const auto outs = run_chain(stages, std::move(in), p);
          Var<double> total = ad::weighted_sum(outs[0], projections[0]);
          for (std::size_t l = 1; l < outs.size(); ++l) {
            total = ad::add(total, ad::weighted_sum(outs[l], projections[l]));
          }
          return total;
        };
        GradcheckOptions gopts;
        gopts.seed = seed;
        const GradReport report = gradcheck(loss, params, gopts);
        out << report.to_json() << "\n";
        return report.pass() ? kExitOk : kExitFailed;
      },
      err);
}

int cmd_bench(const Options& opts, std::ostream& out, std::ostream& err) {
  return guarded(
      [&] {
        CommandScope scope(opts);
        if (opts.repeats < 3) {
          throw ArgumentError("--repeats must be >= 3, got " + std::to_string(opts.repeats));
        }
        if (opts.config.empty()) throw ArgumentError("--config is required");
        const GraphConfig cfg = load_config(opts.config);
        return cfg.dtype.value_or(DType::F32) == DType::F32 ? bench_as<float>(opts, cfg, out)
                                                            : bench_as<double>(opts, cfg, out);
      },
      err);
}

}  // namespace sep::cli
