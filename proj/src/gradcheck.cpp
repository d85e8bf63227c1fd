// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sep/json.hpp"
#include "sep/rng.hpp"

namespace sep {

namespace {

template <class T>
double evaluate(const LossFn<T>& loss, const ParamStore<T>& params) {
  Tape<T> tape;
  const ParamVars<T> vars = bind_constant(tape, params);
  const Var<T> out = loss(tape, vars);
  if (out.value().numel() != 1) {
    throw DimensionError("gradcheck: loss must be a scalar, got " + out.shape().str());
  }
  const double v = static_cast<double>(out.value()[0]);
  if (!std::isfinite(v)) throw NumericError("gradcheck: loss is not finite");
  return v;
}

std::vector<Index> pick_coordinates(Index numel, Index max_coords, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(numel));
  std::iota(all.begin(), all.end(), Index{0});
  const Index budget = std::max<Index>(max_coords, 64);
  if (numel <= budget) return all;
  // Partial Fisher-Yates: the first `budget` slots become a uniform sample.
  for (Index i = 0; i < budget; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(numel - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
  }
  all.resize(static_cast<std::size_t>(budget));
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

std::vector<std::string> GradReport::json_lines() const {
  std::vector<std::string> lines;
  lines.reserve(entries.size());
  for (const auto& e : entries) {
    lines.push_back(json::Object()
                        .field("param", e.param)
                        .field("max_abs_err", e.max_abs_err)
                        .field("max_rel_err", e.max_rel_err)
                        .field("cosine", e.cosine)
                        .field("pass", e.pass)
                        .str());
  }
  return lines;
}

std::string GradReport::to_json() const {
  return json::Object()
      .field("seed", seed)
      .field("eps", eps)
      .field("tol", tol)
      .field("pass", pass())
      .raw("params", json::array(json_lines()))
      .str();
}

template <class T>
GradReport gradcheck(const LossFn<T>& loss, ParamStore<T> params, const GradcheckOptions& opts) {
  if (!(opts.eps >= 1e-7 && opts.eps <= 1e-3)) {
    throw ArgumentError("gradcheck: eps must lie in [1e-7, 1e-3]");
  }
  GradReport report;
  report.eps = opts.eps;
  report.tol = opts.tol;
  report.seed = opts.seed;

  ParamStore<T> analytic;
  {
    Tape<T> tape;
    const ParamVars<T> vars = bind(tape, params);
    const Var<T> out = loss(tape, vars);
    if (out.value().numel() != 1) {
      throw DimensionError("gradcheck: loss must be a scalar, got " + out.shape().str());
    }
    if (!std::isfinite(static_cast<double>(out.value()[0]))) {
      throw NumericError("gradcheck: loss is not finite");
    }
    analytic = tape.backward(out);
  }

  Rng rng(opts.seed);
  const T eps = static_cast<T>(opts.eps);
  for (auto& [name, value] : params) {
    const Tensor<T>& grad = analytic.at(name);
    GradEntry entry;
    entry.param = name;
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_n = 0.0;
    for (Index i : pick_coordinates(value.numel(), opts.max_coords, rng)) {
      const T saved = value[i];
      value[i] = saved + eps;
      const double plus = evaluate(loss, params);
      value[i] = saved - eps;
      const double minus = evaluate(loss, params);
      value[i] = saved;

      const double numeric = (plus - minus) / (2.0 * opts.eps);
      const double a = static_cast<double>(grad[i]);
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-12});
      entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
      entry.max_rel_err = std::max(entry.max_rel_err, abs_err / denom);
      dot += a * numeric;
      norm_a += a * a;
      norm_n += numeric * numeric;
      ++entry.checked;
    }
    if (norm_a > 0.0 && norm_n > 0.0) {
      entry.cosine = dot / (std::sqrt(norm_a) * std::sqrt(norm_n));
    } else {
      entry.cosine = (norm_a == 0.0 && norm_n == 0.0) ? 1.0 : 0.0;
    }
    entry.pass = entry.max_rel_err <= opts.tol;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

template GradReport gradcheck(const LossFn<float>&, ParamStore<float>, const GradcheckOptions&);
template GradReport gradcheck(const LossFn<double>&, ParamStore<double>, const GradcheckOptions&);

}  // namespace sep
