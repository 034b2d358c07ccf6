// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crash/diff/ops.hpp"
#include "crash/diff/tape.hpp"
#include "crash/random.hpp"

// Parameterized layers shared by both architectures. Layers hold pointers
// into a ParameterSet, which keeps element addresses stable.
namespace crash::nn {

using diff::Activation;
using diff::Parameter;
using diff::ParameterSet;
using diff::Tape;
using diff::Var;

// Weights uniform in +-sqrt(1/fan_in), bias zero.
struct Linear {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;

  static Linear create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
  std::size_t in_dim() const { return weight->value.rows(); }
  std::size_t out_dim() const { return weight->value.cols(); }
  void zero();
};

struct LayerNorm {
  Parameter* gain = nullptr;
  Parameter* bias = nullptr;
  double eps = 1e-5;

  static LayerNorm create(ParameterSet& params, const std::string& name, std::size_t dim);
  Var operator()(Tape& tape, Var x) const;
};

// `depth` linear layers with the activation between them and an optional
// layer norm on the output.
struct Mlp {
  std::vector<Linear> layers;
  Activation act = Activation::relu;
  std::optional<LayerNorm> norm;

  static Mlp create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
                    std::size_t out, std::size_t depth, Activation act, bool with_norm, Rng& rng);
  Var operator()(Tape& tape, Var x) const;
  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.back().out_dim(); }
  // Zeros every layer so the MLP maps everything to zero (or the norm bias).
  void zero();
};

}  // namespace crash::nn
