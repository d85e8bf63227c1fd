// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "sep/ca2neck.hpp"
#include "sep/fddem.hpp"
#include "sep/io.hpp"
#include "sep/msgrb.hpp"
#include "sep/parallel.hpp"
#include "sep/spectral.hpp"

namespace {

using namespace sep;
namespace fs = std::filesystem;
using TD = Tensor<double>;
using CT = ComplexTensor<double>;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

const fs::path kConfigs = fs::path(SEP_SOURCE_DIR) / "configs";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CmdOut {
  int code;
  std::string out;
};

CmdOut call(int (*cmd)(const cli::Options&, std::ostream&, std::ostream&), const cli::Options& o) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cmd(o, out, err);
  return {code, out.str()};
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json without_timing(json j) {
  if (j.is_object()) {
    for (const char* k : {"wall_ms", "median_ms", "min_ms"}) j.erase(k);
    for (auto& [k, v] : j.items()) v = without_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timing(v);
  }
  return j;
}

std::string stable_lines(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out += without_timing(json::parse(line)).dump() + "\n";
  }
  return out;
}

Verdict fft_roundtrip() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    // Every fourth plane is a power of two so both paths are covered.
    Index h = 1 + static_cast<Index>(rng() % 64);
    Index w = 1 + static_cast<Index>(rng() % 64);
    if (k % 4 == 0) {
      h = Index{1} << (rng() % 7);
      w = Index{1} << (rng() % 7);
    }
    if (k == 0) h = w = 64;
    const TD x = randn<double>({1, 1, h, w}, rng);
    worst = std::max(worst, oracle::max_abs_diff(ifft2(fft2(x)), x));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 10.0, fmt("max_err=%.3e", worst) + fmt(" time=%.2fs", secs)};
}

Verdict dft_oracle() {
  double worst = 0.0;
  std::uint64_t seed = 200;
  for (Index h : {4, 7, 8, 12, 16, 32}) {
    for (Index w : {4, 7, 8, 12, 16, 32}) {
      const TD x = oracle::random<double>({1, 2, h, w}, seed++);
      std::vector<FftPath> paths{FftPath::Naive};
      if (is_power_of_two(h) && is_power_of_two(w)) paths.push_back(FftPath::Fast);
      for (FftPath path : paths) {
        const CT s = fft2(x, path);
        for (Index c = 0; c < 2; ++c) {
          const oracle::Plane ref = oracle::dft(oracle::plane_of(x, 0, c));
          for (Index u = 0; u < h; ++u)
            for (Index v = 0; v < w; ++v) {
              worst = std::max(worst, std::abs(ref.at(u, v) - oracle::cd(s.re(0, c, u, v), s.im(0, c, u, v))));
            }
        }
      }
    }
  }
  return {worst <= 1e-10, fmt("max_err=%.3e", worst)};
}

Verdict parseval() {
  Rng rng(300);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Index h = 1 + static_cast<Index>(rng() % 64);
    const Index w = 1 + static_cast<Index>(rng() % 64);
    const TD x = randn<double>({1, 1, h, w}, rng);
    const CT s = fft2(x);
    const double spatial = x.array().square().sum();
    const double spectral =
        (s.re.array().square() + s.im.array().square()).sum() / static_cast<double>(h * w);
    worst = std::max(worst, std::abs(spatial - spectral) / spatial);
  }
  return {worst <= 1e-9, fmt("max_rel_err=%.3e", worst)};
}

Verdict identity_at_init() {
  Rng rng(400);
  const TD x = oracle::random<double>({2, 8, 16, 16}, 401);

  const FddemConfig fc{8, 16, 16};
  const bool fddem_ok = fddem_forward(x, fc, fddem_init<double>(fc, rng)) == x;

  const MsgrbConfig mc{8};
  const bool msgrb_ok = msgrb_forward(x, mc, msgrb_init<double>(mc, rng)) == x;

  double dys = 0.0;
  for (Index s : {2, 4}) {
    const DysampleConfig dc{8, s};
    dys = std::max(dys, oracle::max_abs_diff(dysample_forward(x, dc, dysample_init<double>(dc, rng)),
                                             oracle::resize(x, s)));
  }

  // LDConv at N = 9: learn nothing but the mixing weights, which carry a 3x3
  // kernel laid out point-major.
  const LdconvConfig lc{8, 5, 9, 1};
  ParamStore<double> lp = ldconv_init<double>(lc, rng);
  bool offsets_zero = true;
  for (const auto& [name, t] : lp) {
    if (name.rfind("offset.", 0) == 0) offsets_zero = offsets_zero && t.array().abs().maxCoeff() == 0.0;
  }
  const TD kernel = oracle::random<double>({5, 8, 3, 3}, 402);
  TD mix({5, 72, 1, 1});
  for (Index o = 0; o < 5; ++o)
    for (Index c = 0; c < 8; ++c)
      for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b) mix(o, (a * 3 + b) * 8 + c, 0, 0) = kernel(o, c, a, b);
  lp.set("mix.weight", mix);
  const TD y = ldconv_forward(x, lc, lp);
  const TD conv = oracle::conv2d<double>(x, kernel, nullptr, 1, 1);
  double ld = 0.0;
  for (Index n = 0; n < 2; ++n)
    for (Index o = 0; o < 5; ++o)
      for (Index i = 1; i < 15; ++i)
        for (Index j = 1; j < 15; ++j) ld = std::max(ld, std::abs(y(n, o, i, j) - conv(n, o, i, j)));

  const bool pass = fddem_ok && msgrb_ok && dys <= 1e-10 && offsets_zero && ld <= 1e-10;
  return {pass, std::string("fddem=") + (fddem_ok ? "exact" : "differs") +
                    " msgrb=" + (msgrb_ok ? "exact" : "differs") + fmt(" dysample_err=%.3e", dys) +
                    fmt(" ldconv_interior_err=%.3e", ld)};
}

Verdict gradient_certification() {
  const auto t0 = Clock::now();
  bool pass = true;
  double worst = 0.0;
  std::string failed;
  for (const char* name : {"fddem", "msgrb", "ldconv", "dysample", "ca2neck"}) {
    cli::Options o;
    o.config = (kConfigs / (std::string(name) + ".cfg")).string();
    const CmdOut r = call(cli::cmd_gradcheck, o);
    if (r.code != cli::kExitOk) {
      pass = false;
      failed += std::string(" ") + name;
    }
    if (r.out.empty()) continue;
    const json report = json::parse(r.out);
    for (const auto& p : report["params"]) worst = std::max(worst, p["max_rel_err"].get<double>());
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 300.0;
  return {pass, fmt("max_rel_err=%.3e", worst) + fmt(" time=%.1fs", secs) +
                    (failed.empty() ? "" : " failed:" + failed)};
}

Verdict scope_bound() {
  // Offset head fixtures whose outputs stay in [-1, 1], with some channels
  // pinned to exactly +-1.
  double worst = 0.0;
  bool reached = true;
  for (Index s : {2, 4}) {
    const DysampleConfig cfg{4, s, 1, 0.25};
    Rng rng(500 + static_cast<std::uint64_t>(s));
    ParamStore<double> p = dysample_init<double>(cfg, rng);
    TD w(p.at("offset.weight").shape());
    TD b(p.at("offset.bias").shape());
    for (Index k = 0; k < cfg.offset_channels(); ++k) {
      if (k % 3 == 0) {
        b(0, k, 0, 0) = k % 2 == 0 ? 1.0 : -1.0;
        continue;
      }
      for (Index c = 0; c < 4; ++c) w(k, c, 0, 0) = rng.uniform(-0.2, 0.2);
      b(0, k, 0, 0) = rng.uniform(-0.2, 0.2);
    }
    p.set("offset.weight", w);
    p.set("offset.bias", b);
    const TD x = rand_uniform<double>({1, 4, 5, 5}, rng, -1.0, 1.0);
    const TD coords = dysample_coords(x, cfg, p);
    const TD base = dysample_base_grid<double>(1, s, 5, 5);
    double level = 0.0;
    for (Index i = 0; i < coords.numel(); ++i) level = std::max(level, std::abs(coords[i] - base[i]));
    worst = std::max(worst, level);
    reached = reached && level == 0.25;
  }
  return {worst <= 0.25 && reached, fmt("max_deviation=%.17g", worst)};
}

Verdict ldconv_growth() {
  bool pass = true;
  std::string detail;
  for (Index n : {1, 5, 9, 13}) {
    const LdconvConfig cfg{6, 4, n, 1};
    Rng rng(600);
    const Index got = ldconv_weights_per_output(ldconv_init<double>(cfg, rng));
    pass = pass && got == 6 * n;
    detail += " N=" + std::to_string(n) + ":" + std::to_string(got);
  }
  return {pass, "Cin=6" + detail};
}

Verdict performance() {
  cli::Options o;
  o.config = (kConfigs / "bench_fft.cfg").string();
  o.repeats = 7;
  o.threads = 1;
  const CmdOut r = call(cli::cmd_bench, o);
  if (r.code != cli::kExitOk) return {false, "bench exited " + std::to_string(r.code)};
  double fast = 0.0;
  double naive = 0.0;
  const json report = json::parse(r.out);
  for (const auto& rec : report["records"]) {
    (rec["path"] == "fast" ? fast : naive) = rec["median_ms"].get<double>();
  }
  const double ratio = naive / fast;
  return {ratio >= 10.0, fmt("fast=%.3fms", fast) + fmt(" naive=%.3fms", naive) + fmt(" ratio=%.1f", ratio)};
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "sep_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir / "pyramid");
  io::save_tensor(dir / "x4.sept", oracle::random<double>({1, 4, 8, 8}, 700));
  io::save_tensor(dir / "x6.sept", oracle::random<double>({1, 4, 6, 6}, 706));
  io::save_tensor(dir / "x2.sept", oracle::random<double>({1, 2, 8, 8}, 701));
  io::save_tensor(dir / "x8.sept", oracle::random<double>({1, 8, 16, 16}, 702));
  const std::vector<Shape> levels{{1, 4, 8, 8}, {1, 8, 4, 4}, {1, 16, 2, 2}};
  for (std::size_t l = 0; l < 3; ++l) {
    io::save_tensor(dir / "pyramid" / ("level" + std::to_string(l) + ".sept"),
                    oracle::random<double>(levels[l], 703 + l));
  }
  const std::vector<std::pair<const char*, const char*>> forward_runs = {
      {"fddem", "x4.sept"},  {"msgrb", "x4.sept"},     {"ldconv", "x2.sept"},
      {"dysample", "x6.sept"}, {"ca2neck", "pyramid"}, {"chain", "x8.sept"}};

  int mismatches = 0;
  int runs = 0;
  std::string bad;
  for (const auto& [cfg, input] : forward_runs) {
    std::string json_a;
    std::string bytes_a;
    for (int rep = 0; rep < 2; ++rep) {
      cli::Options o;
      o.config = (kConfigs / (std::string(cfg) + ".cfg")).string();
      o.input = (dir / input).string();
      const fs::path out = dir / (std::string(cfg) + "_" + std::to_string(rep) + ".out");
      o.output = out.string();
      const CmdOut r = call(cli::cmd_forward, o);
      std::string bytes;
      if (fs::is_directory(out)) {
        for (int l = 0; l < 3; ++l) bytes += bytes_of(out / ("level" + std::to_string(l) + ".sept"));
      } else {
        bytes = bytes_of(out);
      }
      const std::string stable = std::to_string(r.code) + stable_lines(r.out);
      if (r.code != cli::kExitOk || bytes.empty() || (rep == 1 && (stable != json_a || bytes != bytes_a))) {
        ++mismatches;
        bad += std::string(" forward:") + cfg;
      }
      json_a = stable;
      bytes_a = bytes;
    }
    ++runs;
  }

  auto twice = [&](const char* what, int (*cmd)(const cli::Options&, std::ostream&, std::ostream&),
                   const cli::Options& o) {
    const CmdOut a = call(cmd, o);
    const CmdOut b = call(cmd, o);
    if (a.out.empty() || stable_lines(a.out) != stable_lines(b.out) || a.code != b.code) {
      ++mismatches;
      bad += std::string(" ") + what;
    }
    ++runs;
  };
  cli::Options props;
  props.seed = 3;
  twice("props", cli::cmd_props, props);
  for (const char* cfg : {"msgrb", "ca2neck"}) {
    cli::Options g;
    g.config = (kConfigs / (std::string(cfg) + ".cfg")).string();
    twice("gradcheck", cli::cmd_gradcheck, g);
  }
  cli::Options bench;
  bench.config = (kConfigs / "chain.cfg").string();
  bench.repeats = 3;
  twice("bench", cli::cmd_bench, bench);

  fs::remove_all(dir);
  return {mismatches == 0, std::to_string(runs) + " commands run twice, " + std::to_string(mismatches) + " mismatches" + bad};
}

}  // namespace

int main() {
  set_num_threads(1);
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"fft_roundtrip", fft_roundtrip},
      {"dft_oracle_equivalence", dft_oracle},
      {"parseval", parseval},
      {"identity_at_init", identity_at_init},
      {"gradient_certification", gradient_certification},
      {"scope_bound", scope_bound},
      {"ldconv_linear_growth", ldconv_growth},
      {"fft_speedup", performance},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("%s %-24s %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
