// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sep/ca2neck.hpp"
#include "test_util.hpp"

namespace sep {
namespace {

using TD = Tensor<double>;

// ---------------------------------------------------------------- coords

TEST(LdconvCoords, SmallCases) {
  const auto one = ldconv_coords(1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], std::make_pair(0.0, 0.0));

  const auto nine = ldconv_coords(9);
  ASSERT_EQ(nine.size(), 9u);
  std::size_t k = 0;
  for (double r : {-1.0, 0.0, 1.0})
    for (double c : {-1.0, 0.0, 1.0}) {
      EXPECT_EQ(nine[k].first, r);
      EXPECT_EQ(nine[k].second, c);
      ++k;
    }

  const auto five = ldconv_coords(5);
  const double cells[5][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}};
  ASSERT_EQ(five.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(five[i].first, cells[i][0] - 0.4, 1e-15);
    EXPECT_NEAR(five[i].second, cells[i][1] - 0.8, 1e-15);
  }
  EXPECT_THROW(ldconv_coords(0), ArgumentError);
  EXPECT_THROW(ldconv_coords(-3), ArgumentError);
}

TEST(LdconvCoords, ZeroMean) {
  for (Index n = 1; n <= 40; ++n) {
    double r = 0;
    double c = 0;
    for (const auto& [pr, pc] : ldconv_coords(n)) {
      r += pr;
      c += pc;
    }
    EXPECT_LE(std::abs(r), 1e-12) << n;
    EXPECT_LE(std::abs(c), 1e-12) << n;
  }
}

// ---------------------------------------------------------------- LDConv

// Sum over points and channels of mix * clamped bilinear read at
// anchor + base offset, for zero learned offsets.
TD ldconv_ref(const TD& x, const LdconvConfig& cfg, const TD& mix) {
  const Shape& s = x.shape();
  const auto pts = ldconv_coords(cfg.points);
  const Index ho = (s.h + cfg.stride - 1) / cfg.stride;
  const Index wo = (s.w + cfg.stride - 1) / cfg.stride;
  TD out({s.n, cfg.out_channels, ho, wo});
  for (Index n = 0; n < s.n; ++n)
    for (Index o = 0; o < cfg.out_channels; ++o)
      for (Index i = 0; i < ho; ++i)
        for (Index j = 0; j < wo; ++j) {
          double acc = 0;
          for (Index p = 0; p < cfg.points; ++p)
            for (Index c = 0; c < s.c; ++c) {
              const auto [pr, pc] = pts[static_cast<std::size_t>(p)];
              acc += mix(o, p * s.c + c, 0, 0) *
                     oracle::sample(x, n, c, static_cast<double>(i * cfg.stride) + pr,
                                    static_cast<double>(j * cfg.stride) + pc);
            }
          out(n, o, i, j) = acc;
        }
  return out;
}

TEST(Ldconv, NinePointsIsAThreeByThreeConv) {
  const LdconvConfig cfg{3, 4, 9, 1};
  Rng rng(1);
  ParamStore<double> p = ldconv_init<double>(cfg, rng);
  const TD kernel = oracle::random<double>({4, 3, 3, 3}, 2);
  TD mix({4, 27, 1, 1});
  for (Index o = 0; o < 4; ++o)
    for (Index c = 0; c < 3; ++c)
      for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b) mix(o, (a * 3 + b) * 3 + c, 0, 0) = kernel(o, c, a, b);
  p.set("mix.weight", mix);
  const TD x = oracle::random<double>({2, 3, 7, 6}, 3);
  const TD y = ldconv_forward(x, cfg, p);
  ASSERT_EQ(y.shape(), (Shape{2, 4, 7, 6}));
  const TD conv = oracle::conv2d<double>(x, kernel, nullptr, 1, 1);
  const TD clamped = ldconv_ref(x, cfg, mix);
  for (Index n = 0; n < 2; ++n)
    for (Index o = 0; o < 4; ++o)
      for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 6; ++j) {
          const bool interior = i > 0 && i < 6 && j > 0 && j < 5;
          if (interior) {
            EXPECT_NEAR(y(n, o, i, j), conv(n, o, i, j), 1e-10);
          }
          EXPECT_NEAR(y(n, o, i, j), clamped(n, o, i, j), 1e-10);
        }
}

TEST(Ldconv, SinglePointStrideTwoSubsamples) {
  const LdconvConfig cfg{2, 2, 1, 2};
  Rng rng(4);
  ParamStore<double> p = ldconv_init<double>(cfg, rng);
  TD mix({2, 2, 1, 1});
  mix(0, 0, 0, 0) = 1;
  mix(1, 1, 0, 0) = 1;
  p.set("mix.weight", mix);
  const TD x = oracle::random<double>({1, 2, 7, 8}, 5);
  const TD y = ldconv_forward(x, cfg, p);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 4, 4}));
  for (Index c = 0; c < 2; ++c)
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) EXPECT_EQ(y(0, c, i, j), x(0, c, 2 * i, 2 * j));
}

TEST(Ldconv, FivePointsMatchClampedOracle) {
  const LdconvConfig cfg{3, 2, 5, 2};
  Rng rng(6);
  const ParamStore<double> p = ldconv_init<double>(cfg, rng);
  const TD x = oracle::random<double>({1, 3, 9, 8}, 7);
  EXPECT_LE(oracle::max_abs_diff(ldconv_forward(x, cfg, p), ldconv_ref(x, cfg, p.at("mix.weight"))),
            1e-12);
}

TEST(Ldconv, LearnedOffsetsMoveTheSamplePoints) {
  // Offset bias only: every point of every location shifts by the same (dr, dc).
  const LdconvConfig cfg{2, 3, 5, 1};
  Rng rng(8);
  ParamStore<double> p = ldconv_init<double>(cfg, rng);
  TD bias({1, 10, 1, 1});
  for (Index k = 0; k < 5; ++k) {
    bias(0, 2 * k, 0, 0) = 0.3;
    bias(0, 2 * k + 1, 0, 0) = -0.45;
  }
  p.set("offset.bias", bias);
  const TD x = oracle::random<double>({1, 2, 6, 6}, 9);
  const TD y = ldconv_forward(x, cfg, p);
  const auto pts = ldconv_coords(5);
  const TD& mix = p.at("mix.weight");
  for (Index o = 0; o < 3; ++o)
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) {
        double acc = 0;
        for (Index k = 0; k < 5; ++k)
          for (Index c = 0; c < 2; ++c) {
            acc += mix(o, k * 2 + c, 0, 0) *
                   oracle::sample(x, 0, c, i + pts[k].first + 0.3, j + pts[k].second - 0.45);
          }
        EXPECT_NEAR(y(0, o, i, j), acc, 1e-12);
      }
}

TEST(Ldconv, LinearParameterGrowth) {
  for (Index n : {1, 5, 9, 13}) {
    const LdconvConfig cfg{6, 4, n, 1};
    Rng rng(10);
    const auto p = ldconv_init<double>(cfg, rng);
    EXPECT_EQ(ldconv_weights_per_output(p), 6 * n);
    EXPECT_EQ(p.at("mix.weight").numel(), 4 * 6 * n);
    EXPECT_EQ(p.at("offset.weight").shape().n, 2 * n);
  }
}

TEST(Ldconv, Validation) {
  const LdconvConfig cfg{2, 3, 5, 1};
  Rng rng(11);
  const auto p = ldconv_init<double>(cfg, rng);
  EXPECT_THROW(ldconv_forward(TD({1, 3, 6, 6}), cfg, p), DimensionError);
  EXPECT_THROW(ldconv_forward(TD({1, 2, 6, 6}), LdconvConfig{2, 3, 4, 1}, p), DimensionError);
  EXPECT_THROW(ldconv_init<double>(LdconvConfig{2, 3, 0, 1}, rng), ArgumentError);
  EXPECT_THROW(ldconv_init<double>(LdconvConfig{2, 3, 5, 0}, rng), ArgumentError);
}

TEST(Ldconv, GradientsMatchFiniteDifferences) {
  const LdconvConfig cfg{2, 3, 5, 1};
  Rng rng(12);
  const auto p = ldconv_init<double>(cfg, rng, Init::Random);
  const TD x = oracle::random<double>({1, 2, 8, 8}, 13);
  testutil::expect_pass(testutil::check_module(
      [&](const std::vector<Var<double>>& in, const ParamVars<double>& v) {
        return std::vector<Var<double>>{ldconv(in[0], cfg, v)};
      },
      {x}, p, 14));
}

// ---------------------------------------------------------------- DySample

TEST(Dysample, FreshEqualsBilinearResize) {
  for (Index s : {2, 3, 4}) {
    const DysampleConfig cfg{3, s};
    Rng rng(20);
    const auto p = dysample_init<double>(cfg, rng);
    const TD x = oracle::random<double>({2, 3, 5, 6}, 21);
    const TD y = dysample_forward(x, cfg, p);
    ASSERT_EQ(y.shape(), (Shape{2, 3, 5 * s, 6 * s}));
    EXPECT_LE(oracle::max_abs_diff(y, oracle::resize(x, s)), 1e-10) << s;
  }
}

TEST(Dysample, ShapeContract) {
  const DysampleConfig cfg{3};
  Rng rng(22);
  EXPECT_EQ(cfg.scope, 0.25);
  const auto p = dysample_init<double>(cfg, rng, Init::Random);
  EXPECT_EQ(dysample_forward(oracle::random<double>({1, 3, 8, 8}, 23), cfg, p).shape(),
            (Shape{1, 3, 16, 16}));
}

TEST(Dysample, ConstantsPreservedAndRangeBounded) {
  const DysampleConfig cfg{4, 2, 2};
  Rng rng(24);
  ParamStore<double> p = dysample_init<double>(cfg, rng, Init::Random);
  p.at("offset.weight").array() *= 10.0;  // large offsets, well past the border
  const TD c = TD::full({1, 4, 5, 5}, -2.75);
  EXPECT_EQ(dysample_forward(c, cfg, p), TD::full({1, 4, 10, 10}, -2.75));

  const TD x = oracle::random<double>({1, 4, 5, 5}, 25);
  const TD y = dysample_forward(x, cfg, p);
  for (Index ch = 0; ch < 4; ++ch) {
    const double lo = x.plane(0, ch).minCoeff();
    const double hi = x.plane(0, ch).maxCoeff();
    EXPECT_GE(y.plane(0, ch).minCoeff(), lo);
    EXPECT_LE(y.plane(0, ch).maxCoeff(), hi);
  }
}

TEST(Dysample, ScopeBoundsTheDeviation) {
  // Head outputs kept in [-1, 1]: bias-only channels sit at the extremes and
  // the rest have sum |w| |x| + |b| <= 1 by construction.
  for (Index s : {2, 4}) {
    const DysampleConfig cfg{3, s};
    Rng rng(26);
    ParamStore<double> p = dysample_init<double>(cfg, rng);
    TD w(p.at("offset.weight").shape());
    TD b(p.at("offset.bias").shape());
    const Index oc = cfg.offset_channels();
    for (Index k = 0; k < oc; ++k) {
      if (k % 3 == 0) {
        b(0, k, 0, 0) = k % 2 == 0 ? 1.0 : -1.0;
        continue;
      }
      for (Index c = 0; c < 3; ++c) w(k, c, 0, 0) = rng.uniform(-0.25, 0.25);
      b(0, k, 0, 0) = rng.uniform(-0.25, 0.25);
    }
    p.set("offset.weight", w);
    p.set("offset.bias", b);
    const TD x = rand_uniform<double>({1, 3, 4, 4}, rng, -1.0, 1.0);
    const TD head = oracle::conv2d(x, w, &b, 1, 0);
    ASSERT_LE(head.array().abs().maxCoeff(), 1.0);

    const TD coords = dysample_coords(x, cfg, p);
    const TD base = dysample_base_grid<double>(1, s, 4, 4);
    double worst = 0;
    for (Index a = 0; a < 2; ++a)
      for (Index i = 0; i < 4 * s; ++i)
        for (Index j = 0; j < 4 * s; ++j) {
          worst = std::max(worst, std::abs(coords(0, a, i, j) - base(0, a, i, j)));
        }
    EXPECT_LE(worst, 0.25);
    EXPECT_EQ(worst, 0.25);  // the +-1 channels reach the bound
  }
}

TEST(Dysample, BaseGridPlacement) {
  const TD g = dysample_base_grid<double>(1, 2, 3, 3);
  EXPECT_EQ(g(0, 0, 0, 0), -0.25);
  EXPECT_EQ(g(0, 0, 1, 0), 0.25);
  EXPECT_EQ(g(0, 1, 0, 5), 2.25);
}

TEST(Dysample, Validation) {
  Rng rng(27);
  const DysampleConfig cfg{4};
  const auto p = dysample_init<double>(cfg, rng);
  EXPECT_THROW(dysample_forward(TD({1, 3, 4, 4}), cfg, p), DimensionError);
  EXPECT_THROW(dysample_forward(TD({1, 4, 4, 4}), DysampleConfig{4, 2, 2}, p), DimensionError);
  EXPECT_THROW(dysample_init<double>(DysampleConfig{4, 1}, rng), ArgumentError);
  EXPECT_THROW(dysample_init<double>(DysampleConfig{3, 2, 2}, rng), DimensionError);
}

TEST(Dysample, GradientsMatchFiniteDifferences) {
  const DysampleConfig cfg{2};
  Rng rng(28);
  const auto p = dysample_init<double>(cfg, rng, Init::Random);
  const TD x = oracle::random<double>({1, 2, 6, 6}, 29);
  testutil::expect_pass(testutil::check_module(
      [&](const std::vector<Var<double>>& in, const ParamVars<double>& v) {
        return std::vector<Var<double>>{dysample(in[0], cfg, v)};
      },
      {x}, p, 30));
}

// ---------------------------------------------------------------- neck

std::vector<TD> pyramid(const NeckConfig& cfg, Index h, std::uint64_t seed) {
  std::vector<TD> levels;
  for (int l = 0; l < 3; ++l) {
    levels.push_back(oracle::random<double>({1, cfg.channels[l], h >> l, h >> l}, seed + l));
  }
  return levels;
}

TEST(Neck, ShapesPreserved) {
  const NeckConfig cfg{{32, 64, 128}};
  Rng rng(40);
  const auto p = neck_init<double>(cfg, rng, Init::Random);
  const auto out = ca2neck_forward(pyramid(cfg, 32, 41), cfg, p);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].shape(), (Shape{1, 32, 32, 32}));
  EXPECT_EQ(out[1].shape(), (Shape{1, 64, 16, 16}));
  EXPECT_EQ(out[2].shape(), (Shape{1, 128, 8, 8}));
}

TEST(Neck, FreshIsIdentity) {
  const NeckConfig cfg{{4, 8, 16}};
  Rng rng(42);
  const auto p = neck_init<double>(cfg, rng);
  const auto in = pyramid(cfg, 8, 43);
  const auto out = ca2neck_forward(in, cfg, p);
  for (int l = 0; l < 3; ++l) EXPECT_EQ(out[l], in[l]);
}

TD concat2(const TD& a, const TD& b) {
  const Shape& s = a.shape();
  TD out({s.n, s.c + b.shape().c, s.h, s.w});
  for (Index n = 0; n < s.n; ++n)
    for (Index c = 0; c < out.shape().c; ++c)
      for (Index i = 0; i < s.h; ++i)
        for (Index j = 0; j < s.w; ++j) out(n, c, i, j) = c < s.c ? a(n, c, i, j) : b(n, c - s.c, i, j);
  return out;
}

TEST(Neck, IdentityFusionMatchesComposedOracle) {
  // Fusion blocks and offset heads at their starting point, merges random:
  // every level is then a fixed linear mix of resized and resampled inputs.
  const NeckConfig cfg{{3, 4, 5}};
  Rng rng(44);
  ParamStore<double> p = neck_init<double>(cfg, rng);
  std::uint64_t seed = 45;
  for (const char* m : {"td.merge4", "td.merge3", "bu.merge4", "bu.merge5"}) {
    const std::string name(m);
    p.set(name + ".weight", oracle::random<double>(p.at(name + ".weight").shape(), seed++));
    p.set(name + ".bias", oracle::random<double>(p.at(name + ".bias").shape(), seed++));
  }
  const auto in = pyramid(cfg, 8, 50);
  const auto out = ca2neck_forward(in, cfg, p);

  auto merge = [&](const std::string& m, const TD& lateral, const TD& other) {
    return oracle::conv2d(concat2(lateral, other), p.at(m + ".weight"), &p.at(m + ".bias"), 1, 0);
  };
  auto down = [&](const std::string& m, const TD& x, int level) {
    return ldconv_ref(x, neck_down_config(cfg, level), p.at(m + ".mix.weight"));
  };
  const TD t4 = merge("td.merge4", in[1], oracle::resize(in[2], 2));
  const TD t3 = merge("td.merge3", in[0], oracle::resize(t4, 2));
  const TD o4 = merge("bu.merge4", t4, down("bu.down3", t3, 0));
  const TD o5 = merge("bu.merge5", in[2], down("bu.down4", o4, 1));
  EXPECT_LE(oracle::max_abs_diff(out[0], t3), 1e-10);
  EXPECT_LE(oracle::max_abs_diff(out[1], o4), 1e-10);
  EXPECT_LE(oracle::max_abs_diff(out[2], o5), 1e-10);
}

TEST(Neck, LevelMismatches) {
  const NeckConfig cfg{{4, 8, 16}};
  Rng rng(51);
  const auto p = neck_init<double>(cfg, rng);
  auto in = pyramid(cfg, 8, 52);
  in[2] = TD({1, 16, 3, 3});
  EXPECT_THROW(ca2neck_forward(in, cfg, p), DimensionError);
  in = pyramid(cfg, 8, 52);
  in[1] = TD({1, 7, 4, 4});
  EXPECT_THROW(ca2neck_forward(in, cfg, p), DimensionError);
  in = pyramid(cfg, 8, 52);
  in[0] = TD({2, 4, 8, 8});
  EXPECT_THROW(ca2neck_forward(in, cfg, p), DimensionError);
  in.pop_back();
  EXPECT_THROW(ca2neck_forward(in, cfg, p), DimensionError);
}

TEST(Neck, GradientsMatchFiniteDifferences) {
  const NeckConfig cfg{{4, 8, 16}};
  Rng rng(53);
  const auto p = neck_init<double>(cfg, rng, Init::Random);
  const GradReport r = testutil::check_module(
      [&](const std::vector<Var<double>>& in, const ParamVars<double>& v) {
        return ca2neck(in, cfg, v);
      },
      pyramid(cfg, 8, 54), p, 55);
  testutil::expect_pass(r);
  EXPECT_EQ(r.entries.size(), p.size());
}

}  // namespace
}  // namespace sep
