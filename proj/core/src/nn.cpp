// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/nn.hpp"

#include <cmath>

#include "crash/errors.hpp"

namespace crash::nn {

Linear Linear::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw ConfigError("linear layer " + name + " needs non-zero dimensions");
  diff::Tensor w = diff::Tensor::zeros(in, out);
  const double bound = std::sqrt(1.0 / double(in));
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
  Linear l;
  l.weight = &params.add(name + ".weight", std::move(w));
  l.bias = &params.add(name + ".bias", diff::Tensor::zeros(1, out));
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const { return diff::linear(x, tape.param(*weight), tape.param(*bias)); }

void Linear::zero() {
  weight->value.fill(0.0);
  bias->value.fill(0.0);
}

LayerNorm LayerNorm::create(ParameterSet& params, const std::string& name, std::size_t dim) {
  LayerNorm n;
  n.gain = &params.add(name + ".gain", diff::Tensor({1, dim}, 1.0));
  n.bias = &params.add(name + ".bias", diff::Tensor::zeros(1, dim));
  return n;
}

Var LayerNorm::operator()(Tape& tape, Var x) const {
  return diff::layer_norm(x, tape.param(*gain), tape.param(*bias), eps);
}

Mlp Mlp::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
                std::size_t depth, Activation act, bool with_norm, Rng& rng) {
  if (depth == 0) throw ConfigError("mlp " + name + " needs at least one layer");
  Mlp m;
  m.act = act;
  for (std::size_t i = 0; i < depth; ++i) {
    const std::size_t a = i == 0 ? in : hidden;
    const std::size_t b = i + 1 == depth ? out : hidden;
    m.layers.push_back(Linear::create(params, name + ".l" + std::to_string(i), a, b, rng));
  }
  if (with_norm) m.norm = LayerNorm::create(params, name + ".norm", out);
  return m;
}

Var Mlp::operator()(Tape& tape, Var x) const {
  Var h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = layers[i](tape, h);
    if (i + 1 < layers.size()) h = diff::activation(h, act);
  }
  if (norm) h = (*norm)(tape, h);
  return h;
}

void Mlp::zero() {
  for (Linear& l : layers) l.zero();
  if (norm) norm->gain->value.fill(0.0);
}

}  // namespace crash::nn
