// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "sep/autodiff.hpp"

#include "sep/ops.hpp"
#include "sep/spectral.hpp"

namespace sep {

// ---------------------------------------------------------------- Tape

template <class T>
Var<T> Tape<T>::leaf(std::string name, Tensor<T> value) {
  require_finite(value, "leaf '" + name + "'");
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{"leaf", {}, std::move(value), nullptr, std::move(name), true});
  named_leaves_.push_back(id);
  return Var<T>(this, id);
}

template <class T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  require_finite(value, "constant");
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{"constant", {}, std::move(value), nullptr, {}, false});
  return Var<T>(this, id);
}

template <class T>
Var<T> Tape<T>::record(std::string op, std::vector<Index> inputs, Tensor<T> value,
                       Backward backward) {
  bool needs = false;
  for (Index in : inputs) {
    if (in < 0 || in >= static_cast<Index>(nodes_.size())) {
      throw ArgumentError("record(" + op + "): input node " + std::to_string(in) +
                          " is not on this tape");
    }
    needs = needs || nodes_[static_cast<std::size_t>(in)].requires_grad;
  }
  if (!value.all_finite()) throw NumericError(op + ": produced a non-finite value");
  const Index id = static_cast<Index>(nodes_.size());
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(value),
                        needs ? std::move(backward) : nullptr, {}, needs});
  return Var<T>(this, id);
}

template <class T>
void Tape<T>::accumulate(Index id, const Tensor<T>& grad) {
  const Node& node = nodes_.at(static_cast<std::size_t>(id));
  if (!node.requires_grad) return;
  if (grad.shape() != node.value.shape()) {
    throw DimensionError("gradient " + grad.shape().str() + " for node #" + std::to_string(id) +
                         " (" + node.op + ") does not match its value " +
                         node.value.shape().str());
  }
  if (!grad.all_finite()) {
    throw NumericError("non-finite gradient for node #" + std::to_string(id) + " (" + node.op + ")");
  }
  auto& slot = grads_.at(static_cast<std::size_t>(id));
  if (slot) {
    slot->array() += grad.array();
  } else {
    slot = grad;
  }
}

template <class T>
ParamStore<T> Tape<T>::backward(const Var<T>& output, const Tensor<T>& seed) {
  if (nodes_.empty()) throw ArgumentError("backward: tape is empty");
  if (&output.tape() != this) throw ArgumentError("backward: output is not on this tape");
  const Index out = output.id();
  if (seed.shape() != value(out).shape()) {
    throw DimensionError("backward: seed " + seed.shape().str() + " vs output " +
                         value(out).shape().str());
  }
  grads_.assign(nodes_.size(), std::nullopt);
  if (nodes_[static_cast<std::size_t>(out)].requires_grad) grads_[static_cast<std::size_t>(out)] = seed;

  for (Index id = out; id >= 0; --id) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    const auto& grad = grads_[static_cast<std::size_t>(id)];
    if (grad && node.backward) node.backward(*this, *grad);
  }

  ParamStore<T> result;
  for (Index id : named_leaves_) {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    auto& grad = grads_[static_cast<std::size_t>(id)];
    result.set(node.leaf_name, grad ? std::move(*grad) : Tensor<T>(node.value.shape()));
  }
  grads_.clear();
  return result;
}

template class Tape<float>;
template class Tape<double>;

// ---------------------------------------------------------------- ops

namespace ad {

namespace {

template <class T>
Tape<T>& same_tape(std::initializer_list<const Var<T>*> vars) {
  Tape<T>* tape = &(*vars.begin())->tape();
  for (const Var<T>* v : vars) {
    if (&v->tape() != tape) throw ArgumentError("operands live on different tapes");
  }
  return *tape;
}

template <class T>
Tensor<T> channel_slice(const Tensor<T>& x, Index first, Index count) {
  const Shape& s = x.shape();
  Tensor<T> out(Shape{s.n, count, s.h, s.w});
  for (Index n = 0; n < s.n; ++n) out.channels(n) = x.channels(n).middleRows(first, count);
  return out;
}

template <class T>
Tensor<T> channel_embed(const Tensor<T>& part, const Shape& whole, Index first) {
  Tensor<T> out(whole);
  for (Index n = 0; n < whole.n; ++n) {
    out.channels(n).middleRows(first, part.shape().c) = part.channels(n);
  }
  return out;
}

// Splits an (N, 2C, H, W) node into its real and imaginary halves.
template <class T>
ComplexVar<T> unpack(const Var<T>& packed) {
  const Index c = packed.shape().c / 2;
  auto parts = split_channels(packed, {c, c});
  return {parts[0], parts[1]};
}

}  // namespace

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  Tape<T>& tape = same_tape<T>({&a, &b});
  const Index ia = a.id();
  const Index ib = b.id();
  return tape.record("add", {ia, ib}, sep::add(a.value(), b.value()),
                     [ia, ib](Tape<T>& t, const Tensor<T>& g) {
                       t.accumulate(ia, reduce_to(g, t.value(ia).shape()));
                       t.accumulate(ib, reduce_to(g, t.value(ib).shape()));
                     });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  Tape<T>& tape = same_tape<T>({&a, &b});
  const Index ia = a.id();
  const Index ib = b.id();
  return tape.record("mul", {ia, ib}, sep::mul(a.value(), b.value()),
                     [ia, ib](Tape<T>& t, const Tensor<T>& g) {
                       const Tensor<T>& va = t.value(ia);
                       const Tensor<T>& vb = t.value(ib);
                       if (t.requires_grad(ia)) t.accumulate(ia, reduce_to(sep::mul(g, vb), va.shape()));
                       if (t.requires_grad(ib)) t.accumulate(ib, reduce_to(sep::mul(g, va), vb.shape()));
                     });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  const Index ia = a.id();
  return a.tape().record("scale", {ia}, sep::scale(a.value(), s),
                         [ia, s](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ia, sep::scale(g, s));
                         });
}

template <class T>
Var<T> add_constant(const Var<T>& a, const Tensor<T>& c) {
  const Index ia = a.id();
  Tensor<T> value = sep::add(a.value(), c);
  if (value.shape() != a.shape()) {
    throw DimensionError("add_constant: constant " + c.shape().str() + " would broadcast " +
                         a.shape().str());
  }
  return a.tape().record("add_constant", {ia}, std::move(value),
                         [ia](Tape<T>& t, const Tensor<T>& g) { t.accumulate(ia, g); });
}

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const std::optional<Var<T>>& bias,
              Index stride, Index padding) {
  Tape<T>& tape = same_tape<T>({&x, &weight});
  if (bias) same_tape<T>({&x, &*bias});
  std::vector<Index> inputs{x.id(), weight.id()};
  if (bias) inputs.push_back(bias->id());
  Tensor<T> y = sep::conv2d(x.value(), weight.value(), bias ? &bias->value() : nullptr, stride, padding);
  const Index ix = x.id();
  const Index iw = weight.id();
  const Index ib = bias ? bias->id() : -1;
  return tape.record("conv2d", std::move(inputs), std::move(y),
                     [=](Tape<T>& t, const Tensor<T>& g) {
                       auto grads = conv2d_backward(t.value(ix), t.value(iw), ib >= 0, stride,
                                                    padding, g);
                       t.accumulate(ix, grads.input);
                       t.accumulate(iw, grads.weight);
                       if (ib >= 0) t.accumulate(ib, *grads.bias);
                     });
}

template <class T>
Var<T> depthwise_conv2d(const Var<T>& x, const Var<T>& weight, Index padding) {
  Tape<T>& tape = same_tape<T>({&x, &weight});
  const Index ix = x.id();
  const Index iw = weight.id();
  return tape.record("depthwise_conv2d", {ix, iw},
                     sep::depthwise_conv2d(x.value(), weight.value(), padding),
                     [=](Tape<T>& t, const Tensor<T>& g) {
                       auto grads = depthwise_conv2d_backward(t.value(ix), t.value(iw), padding, g);
                       t.accumulate(ix, grads.input);
                       t.accumulate(iw, grads.weight);
                     });
}

template <class T>
Var<T> bilinear_sample(const Var<T>& x, const Var<T>& coords) {
  Tape<T>& tape = same_tape<T>({&x, &coords});
  const Index ix = x.id();
  const Index ic = coords.id();
  return tape.record("bilinear_sample", {ix, ic},
                     sep::bilinear_sample(x.value(), grid_from_tensor(coords.value())),
                     [=](Tape<T>& t, const Tensor<T>& g) {
                       auto grads = bilinear_sample_backward(
                           t.value(ix), grid_from_tensor(t.value(ic)), g);
                       t.accumulate(ix, grads.input);
                       t.accumulate(ic, grid_to_tensor(grads.grid));
                     });
}

template <class T>
Var<T> gelu(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("gelu", {ix}, sep::gelu(x.value()), [ix](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(ix, gelu_backward(t.value(ix), g));
  });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("sigmoid", {ix}, sep::sigmoid(x.value()),
                         [ix](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ix, sigmoid_backward(t.value(ix), g));
                         });
}

template <class T>
Var<T> silu(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("silu", {ix}, sep::silu(x.value()), [ix](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(ix, silu_backward(t.value(ix), g));
  });
}

template <class T>
std::vector<Var<T>> split_channels(const Var<T>& x, const std::vector<Index>& sizes) {
  auto parts = sep::split_channels(x.value(), sizes);
  const Index ix = x.id();
  const Shape whole = x.shape();
  std::vector<Var<T>> out;
  out.reserve(parts.size());
  Index first = 0;
  for (auto& part : parts) {
    const Index count = part.shape().c;
    out.push_back(x.tape().record("split_channels", {ix}, std::move(part),
                                  [ix, whole, first](Tape<T>& t, const Tensor<T>& g) {
                                    t.accumulate(ix, channel_embed(g, whole, first));
                                  }));
    first += count;
  }
  return out;
}

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: nothing to concatenate");
  Tape<T>& tape = parts.front().tape();
  std::vector<Tensor<T>> values;
  std::vector<Index> ids;
  std::vector<Index> sizes;
  for (const auto& p : parts) {
    if (&p.tape() != &tape) throw ArgumentError("operands live on different tapes");
    values.push_back(p.value());
    ids.push_back(p.id());
    sizes.push_back(p.shape().c);
  }
  return tape.record("concat_channels", ids, sep::concat_channels(values),
                     [ids, sizes](Tape<T>& t, const Tensor<T>& g) {
                       Index first = 0;
                       for (std::size_t i = 0; i < ids.size(); ++i) {
                         t.accumulate(ids[i], channel_slice(g, first, sizes[i]));
                         first += sizes[i];
                       }
                     });
}

template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("global_avg_pool", {ix}, sep::global_avg_pool(x.value()),
                         [ix](Tape<T>& t, const Tensor<T>& g) {
                           const Shape& s = t.value(ix).shape();
                           Tensor<T> d = reduce_to(g, g.shape());
                           Tensor<T> out(s);
                           const T inv = T(1) / static_cast<T>(s.plane_size());
                           for (Index n = 0; n < s.n; ++n)
                             for (Index c = 0; c < s.c; ++c) out.plane(n, c).setConstant(d(n, c, 0, 0) * inv);
                           t.accumulate(ix, out);
                         });
}

template <class T>
Var<T> global_max_pool(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("global_max_pool", {ix}, sep::global_max_pool(x.value()),
                         [ix](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ix, global_max_pool_backward(t.value(ix), g));
                         });
}

template <class T>
Var<T> channel_mean(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("channel_mean", {ix}, sep::channel_mean(x.value()),
                         [ix](Tape<T>& t, const Tensor<T>& g) {
                           const Shape& s = t.value(ix).shape();
                           Tensor<T> out(s);
                           const T inv = T(1) / static_cast<T>(s.c);
                           for (Index n = 0; n < s.n; ++n)
                             out.channels(n).rowwise() = g.channels(n).row(0) * inv;
                           t.accumulate(ix, out);
                         });
}

template <class T>
Var<T> channel_max(const Var<T>& x) {
  const Index ix = x.id();
  return x.tape().record("channel_max", {ix}, sep::channel_max(x.value()),
                         [ix](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ix, channel_max_backward(t.value(ix), g));
                         });
}

template <class T>
Var<T> pixel_shuffle(const Var<T>& x, Index s) {
  const Index ix = x.id();
  return x.tape().record("pixel_shuffle", {ix}, sep::pixel_shuffle(x.value(), s),
                         [ix, s](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ix, pixel_unshuffle(g, s));
                         });
}

template <class T>
ComplexVar<T> fft2(const Var<T>& x) {
  const Index ix = x.id();
  ComplexTensor<T> spectrum = sep::fft2(x.value());
  Var<T> packed = x.tape().record(
      "fft2", {ix}, sep::concat_channels<T>({spectrum.re, spectrum.im}),
      [ix](Tape<T>& t, const Tensor<T>& g) {
        // d/dx = H W * Re(ifft2(G)) for the unnormalized forward transform.
        const Index c = g.shape().c / 2;
        ComplexTensor<T> grad(channel_slice(g, 0, c), channel_slice(g, c, c));
        Tensor<T> dx = ifft2_complex(grad).re;
        dx.array() *= static_cast<T>(dx.shape().plane_size());
        t.accumulate(ix, dx);
      });
  return unpack(packed);
}

template <class T>
Var<T> ifft2(const ComplexVar<T>& s) {
  Tape<T>& tape = same_tape<T>({&s.re, &s.im});
  const Index ir = s.re.id();
  const Index ii = s.im.id();
  return tape.record("ifft2", {ir, ii}, sep::ifft2(ComplexTensor<T>(s.re.value(), s.im.value())),
                     [ir, ii](Tape<T>& t, const Tensor<T>& g) {
                       ComplexTensor<T> spec = sep::fft2(g);
                       const T inv = T(1) / static_cast<T>(g.shape().plane_size());
                       spec.re.array() *= inv;
                       spec.im.array() *= inv;
                       t.accumulate(ir, spec.re);
                       t.accumulate(ii, spec.im);
                     });
}

template <class T>
ComplexVar<T> modulate(const ComplexVar<T>& s, const ComplexVar<T>& w) {
  Tape<T>& tape = same_tape<T>({&s.re, &s.im, &w.re, &w.im});
  const Index sr = s.re.id();
  const Index si = s.im.id();
  const Index wr = w.re.id();
  const Index wi = w.im.id();
  ComplexTensor<T> out = sep::modulate(ComplexTensor<T>(s.re.value(), s.im.value()),
                                       ComplexWeights<T>{w.re.value(), w.im.value()});
  Var<T> packed = tape.record(
      "modulate", {sr, si, wr, wi}, sep::concat_channels<T>({out.re, out.im}),
      [=](Tape<T>& t, const Tensor<T>& g) {
        const Index c = g.shape().c / 2;
        auto grads = modulate_backward(ComplexTensor<T>(t.value(sr), t.value(si)),
                                       ComplexWeights<T>{t.value(wr), t.value(wi)},
                                       ComplexTensor<T>(channel_slice(g, 0, c), channel_slice(g, c, c)));
        t.accumulate(sr, grads.spectrum.re);
        t.accumulate(si, grads.spectrum.im);
        t.accumulate(wr, grads.weights.re);
        t.accumulate(wi, grads.weights.im);
      });
  return unpack(packed);
}

template <class T>
Var<T> sum(const Var<T>& x) {
  const Index ix = x.id();
  Tensor<T> y(Shape{});
  y[0] = x.value().array().sum();
  return x.tape().record("sum", {ix}, std::move(y), [ix](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(ix, Tensor<T>::full(t.value(ix).shape(), g[0]));
  });
}

template <class T>
Var<T> weighted_sum(const Var<T>& x, const Tensor<T>& weights) {
  require_same_shape(x.value(), weights, "weighted_sum");
  const Index ix = x.id();
  Tensor<T> y(Shape{});
  y[0] = (x.value().array() * weights.array()).sum();
  return x.tape().record("weighted_sum", {ix}, std::move(y),
                         [ix, weights](Tape<T>& t, const Tensor<T>& g) {
                           t.accumulate(ix, sep::scale(weights, g[0]));
                         });
}

#define SEP_INSTANTIATE_AD(T)                                                                  \
  template Var<T> add(const Var<T>&, const Var<T>&);                                           \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                           \
  template Var<T> scale(const Var<T>&, T);                                                     \
  template Var<T> add_constant(const Var<T>&, const Tensor<T>&);                               \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const std::optional<Var<T>>&, Index,    \
                         Index);                                                               \
  template Var<T> depthwise_conv2d(const Var<T>&, const Var<T>&, Index);                       \
  template Var<T> bilinear_sample(const Var<T>&, const Var<T>&);                               \
  template Var<T> gelu(const Var<T>&);                                                         \
  template Var<T> sigmoid(const Var<T>&);                                                      \
  template Var<T> silu(const Var<T>&);                                                         \
  template std::vector<Var<T>> split_channels(const Var<T>&, const std::vector<Index>&);       \
  template Var<T> concat_channels(const std::vector<Var<T>>&);                                 \
  template Var<T> global_avg_pool(const Var<T>&);                                              \
  template Var<T> global_max_pool(const Var<T>&);                                              \
  template Var<T> channel_mean(const Var<T>&);                                                 \
  template Var<T> channel_max(const Var<T>&);                                                  \
  template Var<T> pixel_shuffle(const Var<T>&, Index);                                         \
  template ComplexVar<T> fft2(const Var<T>&);                                                  \
  template Var<T> ifft2(const ComplexVar<T>&);                                                 \
  template ComplexVar<T> modulate(const ComplexVar<T>&, const ComplexVar<T>&);                 \
  template Var<T> sum(const Var<T>&);                                                          \
  template Var<T> weighted_sum(const Var<T>&, const Tensor<T>&);

SEP_INSTANTIATE_AD(float)
SEP_INSTANTIATE_AD(double)

#undef SEP_INSTANTIATE_AD

}  // namespace ad

}  // namespace sep
