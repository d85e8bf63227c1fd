// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode differentiation. A Tape records every operation executed on
// Vars; backward() walks the record once in reverse and accumulates
// gradients into each node's inputs.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sep/param_store.hpp"
#include "sep/tensor.hpp"

namespace sep {

template <class T>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <class T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, Index id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  Index id() const { return id_; }
  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<T>* tape_ = nullptr;
  Index id_ = -1;
};

template <class T>
class Tape {
 public:
  /// Adds the incoming gradient of a node to its inputs via tape.accumulate().
  using Backward = std::function<void(Tape&, const Tensor<T>& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A differentiable leaf; its gradient is reported under `name`.
  Var<T> leaf(std::string name, Tensor<T> value);

  /// A leaf that never receives a gradient.
  Var<T> constant(Tensor<T> value);

  /// Records an operation. Inputs must already be on this tape.
  Var<T> record(std::string op, std::vector<Index> inputs, Tensor<T> value, Backward backward);

  const Tensor<T>& value(Index id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  const std::string& op(Index id) const { return nodes_.at(static_cast<std::size_t>(id)).op; }
  bool requires_grad(Index id) const {
    return nodes_.at(static_cast<std::size_t>(id)).requires_grad;
  }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `grad` into node `id`'s gradient buffer. Only valid inside backward().
  void accumulate(Index id, const Tensor<T>& grad);

  /// Runs the reverse sweep from `output` seeded with `seed` and returns the
  /// gradient of every named leaf, zero-filled where the output does not
  /// depend on it.
  ParamStore<T> backward(const Var<T>& output, const Tensor<T>& seed);

  /// backward() seeded with ones.
  ParamStore<T> backward(const Var<T>& output) {
    return backward(output, Tensor<T>::ones(output.shape()));
  }

 private:
  struct Node {
    std::string op;
    std::vector<Index> inputs;
    Tensor<T> value;
    Backward backward;
    std::string leaf_name;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor<T>>> grads_;
  std::vector<Index> named_leaves_;
};

/// Name -> Var lookup handed to module forwards; mirrors ParamStore naming.
template <class T>
class ParamVars {
 public:
  void set(const std::string& name, Var<T> v) { vars_[name] = v; }

  Var<T> operator[](const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw ArgumentError("no bound parameter named '" + name + "'");
    return it->second;
  }

  bool contains(const std::string& name) const { return vars_.count(name) != 0; }

  ParamVars scoped(const std::string& prefix) const {
    ParamVars out;
    const std::string head = prefix + ".";
    for (const auto& [name, v] : vars_) {
      if (name.compare(0, head.size(), head) == 0) out.vars_[name.substr(head.size())] = v;
    }
    return out;
  }

 private:
  std::map<std::string, Var<T>> vars_;
};

/// Puts every entry of `params` on the tape as a named leaf.
template <class T>
ParamVars<T> bind(Tape<T>& tape, const ParamStore<T>& params) {
  ParamVars<T> vars;
  for (const auto& [name, value] : params) vars.set(name, tape.leaf(name, value));
  return vars;
}

/// Puts every entry on the tape as a constant (forward-only evaluation).
template <class T>
ParamVars<T> bind_constant(Tape<T>& tape, const ParamStore<T>& params) {
  ParamVars<T> vars;
  for (const auto& [name, value] : params) vars.set(name, tape.constant(value));
  return vars;
}

/// Real and imaginary halves of a complex quantity on a tape.
template <class T>
struct ComplexVar {
  Var<T> re;
  Var<T> im;
};

namespace ad {

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <class T>
Var<T> scale(const Var<T>& a, T s);

/// a + c for a fixed tensor c (broadcast allowed).
template <class T>
Var<T> add_constant(const Var<T>& a, const Tensor<T>& c);

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
              Index stride, Index padding);
template <class T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, Index padding);

/// coords is an (N, 2*groups, H_out, W_out) row/col tensor (see grid_to_tensor).
template <class T>
Var<T> bilinear_sample(const Var<T>& x, const Var<T>& coords);

template <class T>
Var<T> gelu(const Var<T>& x);
template <class T>
Var<T> sigmoid(const Var<T>& x);
template <class T>
Var<T> silu(const Var<T>& x);

template <class T>
std::vector<Var<T>> split_channels(const Var<T>& x, const std::vector<Index>& sizes);
template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts);

template <class T>
Var<T> global_avg_pool(const Var<T>& x);
template <class T>
Var<T> global_max_pool(const Var<T>& x);
template <class T>
Var<T> channel_mean(const Var<T>& x);
template <class T>
Var<T> channel_max(const Var<T>& x);

template <class T>
Var<T> pixel_shuffle(const Var<T>& x, Index s);

template <class T>
ComplexVar<T> fft2(const Var<T>& x);
/// Real part of the inverse transform.
template <class T>
Var<T> ifft2(const ComplexVar<T>& s);
/// s is (N, C, H, W), w is (1, C, H, W).
template <class T>
ComplexVar<T> modulate(const ComplexVar<T>& s, const ComplexVar<T>& w);

/// Sum of all elements, as a (1, 1, 1, 1) node.
template <class T>
Var<T> sum(const Var<T>& x);
/// Sum of x * weights, as a (1, 1, 1, 1) node.
template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights);

}  // namespace ad

}  // namespace sep
