// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "oracles.hpp"
#include "sep/fddem.hpp"
#include "sep/io.hpp"
#include "sep/msgrb.hpp"

namespace sep::cli {
namespace {

namespace fs = std::filesystem;
using TD = Tensor<double>;
using nlohmann::json;

const fs::path kConfigs = fs::path(SEP_SOURCE_DIR) / "configs";

struct Result {
  int code;
  std::string out;
  std::string err;
};

template <class Cmd>
Result run(Cmd cmd, const Options& opts) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cmd(opts, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Options forward_opts(const fs::path& config, const fs::path& input, const fs::path& output) {
  Options o;
  o.config = config.string();
  o.input = input.string();
  o.output = output.string();
  return o;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sep_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

// config

TEST(Config, ParsesGlobalsAndModules) {
  const GraphConfig cfg = parse_config(
      "# chain\n"
      "[global]\n"
      "seed = 42   ; trailing comment\n"
      "dtype = f32\n"
      "input = 1x4x8x8\n"
      "\n"
      "[module msgrb]\n"
      "kernels = 3,5\n"
      "[module msgrb]\n");
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.dtype, DType::F32);
  ASSERT_EQ(cfg.inputs.size(), 1u);
  EXPECT_EQ(cfg.inputs[0], (Shape{1, 4, 8, 8}));
  ASSERT_EQ(cfg.modules.size(), 2u);
  EXPECT_EQ(cfg.modules[0].kind, "msgrb");
  EXPECT_EQ(cfg.modules[0].keys.at("kernels"), "3,5");

  const auto stages = resolve(cfg, cfg.inputs);
  ASSERT_EQ(stages.size(), 2u);
  EXPECT_EQ(stages[0].label, "msgrb");
  EXPECT_EQ(stages[1].label, "msgrb_1");
  EXPECT_EQ(std::get<MsgrbConfig>(stages[0].config).kernels, (std::vector<Index>{3, 5}));
  EXPECT_EQ(stages[1].out, cfg.inputs);
}

TEST(Config, PyramidShapes) {
  EXPECT_EQ(parse_shapes("1x4x8x8, 1x8x4x4,1x16x2x2").size(), 3u);
  EXPECT_THROW(parse_shape("1x4x8"), ArgumentError);
  EXPECT_THROW(parse_shape("1x4x8xq"), ArgumentError);
}

TEST(Config, SyntaxErrorsAreArgumentErrors) {
  for (const char* text : {
           "[global]\nseed\n",                       // no '='
           "[global]\nseed = -3\n",                  // not a u64
           "[global]\ndtype = f16\n",                // unknown dtype
           "[module nope]\n",                        // unknown module
           "seed = 1\n",                             // key outside a section
           "[global\nseed = 1\n",                    // unterminated header
       }) {
    EXPECT_THROW(parse_config(text), ArgumentError) << text;
  }
  const GraphConfig bad_key = parse_config("[global]\ninput = 1x4x8x8\n[module msgrb]\nkernal = 3\n");
  EXPECT_THROW(resolve(bad_key, bad_key.inputs), ArgumentError);
  const GraphConfig bad_src = parse_config("[global]\ninput = 1x4x8x8\n[module msgrb]\nparams = maybe\n");
  EXPECT_THROW(resolve(bad_src, bad_src.inputs), ArgumentError);
}

TEST(Config, ErrorMessagesCarryLineNumbers) {
  try {
    parse_config("[global]\n\nseed = x\n");
    FAIL() << "expected a parse error";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_config("[global]\ninput = 1x4x8\n");
    FAIL() << "expected a parse error";
  } catch (const ArgumentError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Config, ShapeDisagreementsAreDimensionErrors) {
  // The LDConv changes the channel count, so a following module declared
  // for the old count is rejected before anything runs.
  const GraphConfig chain = parse_config(
      "[global]\ninput = 1x4x8x8\n"
      "[module ldconv]\nout_channels = 6\n"
      "[module ca2neck]\nchannels = 4,8,16\n");
  EXPECT_THROW(resolve(chain, chain.inputs), DimensionError);
  const GraphConfig neck =
      parse_config("[global]\ninput = 1x4x8x8, 1x8x4x4, 1x16x2x2\n[module ca2neck]\nchannels = 4,8,32\n");
  EXPECT_THROW(resolve(neck, neck.inputs), DimensionError);
  const GraphConfig ok =
      parse_config("[global]\ninput = 1x4x8x8, 1x8x4x4, 1x16x2x2\n[module ca2neck]\nchannels = 4,8,16\n");
  EXPECT_EQ(resolve(ok, ok.inputs).back().out, ok.inputs);
}

// forward

TEST_F(Cli, IdentityChainCopiesTheInputBytes) {
  const fs::path in = dir_ / "x.sept";
  const fs::path out = dir_ / "y.sept";
  io::save_tensor(in, oracle::random<double>({1, 8, 16, 16}, 1));
  write_text(dir_ / "c.cfg", "[global]\nseed = 5\n[module msgrb]\n[module msgrb]\nkernels = 3\n");
  const Result r = run(cmd_forward, forward_opts(dir_ / "c.cfg", in, out));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(bytes_of(out), bytes_of(in));

  const json stats = json::parse(r.out);
  EXPECT_EQ(stats["shape"], json::array({1, 8, 16, 16}));
  EXPECT_EQ(stats["seed"], 5);
  for (const char* key : {"min", "max", "mean", "l2", "wall_ms"}) EXPECT_TRUE(stats.contains(key)) << key;
}

TEST_F(Cli, SpatialOnlyFddemMatchesOracleMean) {
  const FddemConfig fc{4, 8, 8};
  Rng rng(3);
  ParamStore<double> p = fddem_init<double>(fc, rng, Init::Random);
  for (Index b = 0; b < fc.branches; ++b) {
    p.at("freq.w" + std::to_string(b) + ".re").array() = 1.0;
    p.at("freq.w" + std::to_string(b) + ".im").array() = 0.0;
  }
  for (auto& [name, t] : p) {
    if (name.rfind("attn.", 0) == 0 || name.rfind("compress.", 0) == 0) t.array() = 0.0;
  }
  io::save_params(dir_ / "p.sepp", p);
  write_text(dir_ / "c.cfg", "[global]\ndtype = f64\n[module fddem]\nparams = file:p.sepp\n");
  const TD x = oracle::random<double>({2, 4, 8, 8}, 4);
  io::save_tensor(dir_ / "x.sept", x);

  const Result r = run(cmd_forward, forward_opts(dir_ / "c.cfg", dir_ / "x.sept",
                                  dir_ / "y.sept"));
  ASSERT_EQ(r.code, kExitOk) << r.err;

  TD h = oracle::conv2d(x, p.at("spatial.conv1.weight"), &p.at("spatial.conv1.bias"), 1, 1);
  for (auto& v : h.values()) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
  const TD s = oracle::conv2d(h, p.at("spatial.conv2.weight"), &p.at("spatial.conv2.bias"), 1, 1);
  TD expect(x.shape());
  double mean = 0.0;
  for (Index i = 0; i < x.numel(); ++i) {
    expect[i] = x[i] + s[i];
    mean += expect[i];
  }
  mean /= static_cast<double>(x.numel());
  EXPECT_NEAR(json::parse(r.out)["mean"].get<double>(), mean, 1e-12);
  EXPECT_LE(oracle::max_abs_diff(io::load_tensor<double>(dir_ / "y.sept"), expect), 1e-10);
}

TEST_F(Cli, MissingInputNamesThePath) {
  const fs::path missing = dir_ / "nowhere.sept";
  const Result r = run(cmd_forward, forward_opts(kConfigs / "msgrb.cfg", missing, ""));
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, ForwardErrorCodes) {
  const fs::path out = dir_ / "y.sept";
  io::save_tensor(dir_ / "wrong.sept", TD({1, 3, 8, 8}));
  Result r = run(cmd_forward, forward_opts(kConfigs / "msgrb.cfg", dir_ / "wrong.sept", out));
  EXPECT_EQ(r.code, kExitShape) << r.err;
  EXPECT_FALSE(r.err.empty());

  TD nan_in({1, 4, 8, 8});
  nan_in(0, 1, 2, 3) = std::numeric_limits<double>::quiet_NaN();
  io::save_tensor(dir_ / "nan.sept", nan_in);
  r = run(cmd_forward, forward_opts(kConfigs / "msgrb.cfg", dir_ / "nan.sept", out));
  EXPECT_EQ(r.code, kExitNumeric) << r.err;

  std::ofstream(dir_ / "junk.sept") << "not a tensor";
  r = run(cmd_forward, forward_opts(kConfigs / "msgrb.cfg", dir_ / "junk.sept", out));
  EXPECT_EQ(r.code, kExitConfig) << r.err;

  write_text(dir_ / "bad.cfg", "[module msgrb]\nkernels = 4\n");
  io::save_tensor(dir_ / "x.sept", TD({1, 4, 8, 8}));
  r = run(cmd_forward, forward_opts(dir_ / "bad.cfg", dir_ / "x.sept", out));
  EXPECT_EQ(r.code, kExitConfig) << r.err;

  EXPECT_FALSE(fs::exists(out));  // nothing written by any failed run
}

TEST_F(Cli, PyramidDirectories) {
  const fs::path in = dir_ / "in";
  fs::create_directories(in);
  const std::vector<Shape> shapes{{1, 4, 8, 8}, {1, 8, 4, 4}, {1, 16, 2, 2}};
  for (std::size_t l = 0; l < 3; ++l) {
    io::save_tensor(in / ("level" + std::to_string(l) + ".sept"), oracle::random<double>(shapes[l], 10 + l));
  }
  const Result r = run(cmd_forward, forward_opts(kConfigs / "ca2neck.cfg", in, dir_ / "out"));
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (std::size_t l = 0; l < 3; ++l) {
    EXPECT_EQ(io::load_tensor<double>(dir_ / "out" / ("level" + std::to_string(l) + ".sept")).shape(), shapes[l]);
  }
  EXPECT_EQ(json::parse(r.out)["shape"].size(), 3u);
}

// props

TEST(Props, AllPass) {
  Options o;
  o.seed = 0;
  const Result r = run(cmd_props, o);
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  const auto lines = json_lines(r.out);
  EXPECT_GE(lines.size(), 30u);
  for (const auto& l : lines) {
    EXPECT_TRUE(l["pass"].get<bool>()) << l.dump();
    EXPECT_EQ(l.size(), 5u);
  }
}

TEST(Props, FilterRunsOneSuite) {
  Options o;
  o.filter = "spectral";
  const Result r = run(cmd_props, o);
  EXPECT_EQ(r.code, kExitOk);
  const auto lines = json_lines(r.out);
  ASSERT_FALSE(lines.empty());
  for (const auto& l : lines) EXPECT_EQ(l["suite"], "spectral");
}

TEST(Props, InjectedFaultIsCaught) {
  Options o;
  o.inject_fault = "modulate-sign";
  const Result r = run(cmd_props, o);
  EXPECT_EQ(r.code, kExitFailed);
  bool parseval_failed = false;
  std::size_t count = 0;
  for (const auto& l : json_lines(r.out)) {
    ++count;
    if (l["property"] == "modulated_parseval") parseval_failed = !l["pass"].get<bool>();
  }
  EXPECT_TRUE(parseval_failed);
  EXPECT_EQ(count, json_lines(run(cmd_props, Options{}).out).size());  // the suite ran to the end

  // The fault is scoped to the command.
  EXPECT_EQ(run(cmd_props, Options{}).code, kExitOk);
}

TEST(Props, UnknownSuiteOrFault) {
  Options o;
  o.filter = "nope";
  EXPECT_EQ(run(cmd_props, o).code, kExitConfig);
  o.filter.clear();
  o.inject_fault = "nope";
  EXPECT_EQ(run(cmd_props, o).code, kExitConfig);
}

// gradcheck

class Gradcheck : public ::testing::TestWithParam<const char*> {};

TEST_P(Gradcheck, ShippedConfigPasses) {
  Options o;
  o.config = (kConfigs / (std::string(GetParam()) + ".cfg")).string();
  const Result r = run(cmd_gradcheck, o);
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  const json rep = json::parse(r.out);
  EXPECT_TRUE(rep["pass"].get<bool>());
  EXPECT_EQ(rep["seed"], 7);
  EXPECT_DOUBLE_EQ(rep["eps"].get<double>(), 1e-5);
  ASSERT_FALSE(rep["params"].empty());
  for (const auto& p : rep["params"]) {
    EXPECT_LE(p["max_rel_err"].get<double>(), 1e-4) << p.dump();
    EXPECT_EQ(p["param"].get<std::string>().rfind(GetParam(), 0), 0u) << p.dump();
  }
}

INSTANTIATE_TEST_SUITE_P(Configs, Gradcheck,
                         ::testing::Values("msgrb", "fddem", "ldconv", "dysample", "ca2neck"));

TEST(GradcheckCmd, NeedsAnInputShape) {
  Options o;
  o.config = "/definitely/not/here.cfg";
  EXPECT_EQ(run(cmd_gradcheck, o).code, kExitConfig);
}

// bench

TEST(Bench, RepeatsBelowThreeRejected) {
  Options o;
  o.config = (kConfigs / "bench_fft.cfg").string();
  o.repeats = 1;
  const Result r = run(cmd_bench, o);
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_TRUE(r.out.empty());
}

TEST(Bench, OneRecordPerModule) {
  Options o;
  o.config = (kConfigs / "bench_fft.cfg").string();
  o.repeats = 3;
  const Result r = run(cmd_bench, o);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json rep = json::parse(r.out);
  ASSERT_EQ(rep["records"].size(), 2u);
  EXPECT_EQ(rep["records"][0]["path"], "fast");
  EXPECT_EQ(rep["records"][1]["path"], "naive");
  for (const auto& rec : rep["records"]) {
    EXPECT_EQ(rec["input_shape"], json::array({1, 8, 64, 64}));
    EXPECT_LE(rec["min_ms"].get<double>(), rec["median_ms"].get<double>());
  }

  o.config = (kConfigs / "chain.cfg").string();
  const json chain = json::parse(run(cmd_bench, o).out);
  ASSERT_EQ(chain["records"].size(), 2u);
  EXPECT_EQ(chain["records"][0]["module"], "fddem");
  EXPECT_EQ(chain["records"][1]["module"], "msgrb");
}

// determinism

json without_timing(json j) {
  if (j.is_object()) {
    for (const char* k : {"wall_ms", "median_ms", "min_ms"}) j.erase(k);
    for (auto& [k, v] : j.items()) v = without_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timing(v);
  }
  return j;
}

TEST_F(Cli, RepeatedRunsAgree) {
  io::save_tensor(dir_ / "x.sept", oracle::random<double>({1, 4, 8, 8}, 30));
  std::vector<std::string> outs;
  std::vector<std::string> files;
  for (int i = 0; i < 2; ++i) {
    const fs::path out = dir_ / ("y" + std::to_string(i) + ".sept");
    const Options o = forward_opts(kConfigs / "fddem.cfg", dir_ / "x.sept", out);
    const Result r = run(cmd_forward, o);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    outs.push_back(without_timing(json::parse(r.out)).dump());
    files.push_back(bytes_of(out));
  }
  EXPECT_EQ(outs[0], outs[1]);
  EXPECT_EQ(files[0], files[1]);

  Options g;
  g.config = (kConfigs / "ldconv.cfg").string();
  EXPECT_EQ(run(cmd_gradcheck, g).out, run(cmd_gradcheck, g).out);
  Options b;
  b.config = (kConfigs / "chain.cfg").string();
  b.repeats = 3;
  EXPECT_EQ(without_timing(json::parse(run(cmd_bench, b).out)),
            without_timing(json::parse(run(cmd_bench, b).out)));
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  io::save_tensor(dir_ / "x.sept", oracle::random<double>({1, 4, 8, 8}, 31));
  Options o = forward_opts(kConfigs / "fddem.cfg", dir_ / "x.sept", "");
  const json a = json::parse(run(cmd_forward, o).out);
  o.seed = 8;
  const json b = json::parse(run(cmd_forward, o).out);
  EXPECT_EQ(a["seed"], 7);
  EXPECT_EQ(b["seed"], 8);
  EXPECT_NE(a["l2"], b["l2"]);
}

// binary

int status_of(const std::string& args) {
  const std::string cmd = std::string(SEP_BINARY) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(status_of(""), kExitConfig);
  EXPECT_EQ(status_of("frobnicate"), kExitConfig);
  EXPECT_EQ(status_of("forward --config x.cfg"), kExitConfig);  // --input missing
  EXPECT_EQ(status_of("bench --config " + (kConfigs / "bench_fft.cfg").string() + " --repeats 2"), kExitConfig);
  EXPECT_EQ(status_of("props --filter spectral"), kExitOk);
  EXPECT_EQ(status_of("props --filter spectral --inject-fault modulate-sign"), kExitFailed);
  EXPECT_EQ(status_of("props --filter spectral --threads 0"), kExitConfig);
  EXPECT_EQ(status_of("--help"), kExitOk);
}

}  // namespace
}  // namespace sep::cli
