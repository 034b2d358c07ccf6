// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/transolver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crash/errors.hpp"

namespace crash::transolver {

void TransolverConfig::validate() const {
  if (num_slices < 1) throw ConfigError("transolver: num_slices must be >= 1");
  if (num_heads < 1 || hidden_dim % num_heads != 0) {
    throw ConfigError("transolver: hidden_dim " + std::to_string(hidden_dim) + " not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (num_layers < 1) throw ConfigError("transolver: num_layers must be >= 1");
  if (!(mlp_ratio > 0.0)) throw ConfigError("transolver: mlp_ratio must be positive");
  if (in_dim == 0 || out_dim == 0) throw ConfigError("transolver: in/out dims must be non-zero");
}

Var slice_weights(Tape& tape, Var x, const nn::Linear& proj) { return diff::softmax(proj(tape, x), 1); }

Var encode_tokens(Var x, Var weights) {
  Var pooled = diff::matmul(weights, x, true, false);
  Var mass = diff::transpose(diff::col_sum(weights));
  return diff::row_scale(pooled, diff::reciprocal_guarded(mass, kSliceMassFloor));
}

Var token_attention(Tape& tape, Var tokens, const TokenAttention& params, double scale,
                    std::vector<Var>* attention_maps) {
  const std::size_t heads = params.query.size();
  const std::size_t c = tokens.cols();
  if (heads == 0 || c % heads != 0) throw ShapeError("token_attention: channels not divisible by heads");
  const std::size_t dh = c / heads;
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var part = heads == 1 ? tokens : diff::slice_cols(tokens, h * dh, (h + 1) * dh);
    Var q = params.query[h](tape, part);
    Var k = params.key[h](tape, part);
    Var v = params.value[h](tape, part);
    Var attn = diff::softmax(diff::scale(diff::matmul(q, k, false, true), scale), 1);
    if (attention_maps) attention_maps->push_back(attn);
    outs.push_back(diff::matmul(attn, v));
  }
  Var merged = heads == 1 ? outs.front() : diff::concat(outs);
  return params.output(tape, merged);
}

Var deslice(Var weights, Var tokens) { return diff::matmul(weights, tokens); }

TransolverModel::TransolverModel(const TransolverConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t c = config_.hidden_dim;
  const std::size_t dh = config_.head_dim();
  const auto hidden = std::max<std::size_t>(1, std::size_t(std::llround(config_.mlp_ratio * double(c))));
  embed_ = nn::Linear::create(params_, "embed", config_.in_dim, c, rng);
  for (std::size_t l = 0; l < config_.num_layers; ++l) {
    const std::string p = "block" + std::to_string(l);
    Block b;
    b.attn_norm = nn::LayerNorm::create(params_, p + ".attn_norm", c);
    b.slice_proj = nn::Linear::create(params_, p + ".slice_proj", c, config_.num_slices, rng);
    for (std::size_t h = 0; h < config_.num_heads; ++h) {
      const std::string hp = p + ".head" + std::to_string(h);
      b.attention.query.push_back(nn::Linear::create(params_, hp + ".q", dh, dh, rng));
      b.attention.key.push_back(nn::Linear::create(params_, hp + ".k", dh, dh, rng));
      b.attention.value.push_back(nn::Linear::create(params_, hp + ".v", dh, dh, rng));
    }
    b.attention.output = nn::Linear::create(params_, p + ".attn_out", c, c, rng);
    b.mlp_norm = nn::LayerNorm::create(params_, p + ".mlp_norm", c);
    b.mlp = nn::Mlp::create(params_, p + ".mlp", c, hidden, c, 2, config_.activation, false, rng);
    blocks_.push_back(std::move(b));
  }
  head_ = nn::Linear::create(params_, "head", c, config_.out_dim, rng);
}

Var TransolverModel::physics_attention(Tape& tape, Var x, const Block& block) const {
  Var w = slice_weights(tape, x, block.slice_proj);
  Var z = encode_tokens(x, w);
  Var z_new = token_attention(tape, z, block.attention, 1.0 / std::sqrt(double(config_.head_dim())));
  return deslice(w, z_new);
}

Var TransolverModel::block_forward(Tape& tape, Var x, std::size_t layer) const {
  const Block& b = blocks_.at(layer);
  Var h = diff::add(x, physics_attention(tape, b.attn_norm(tape, x), b));
  return diff::add(h, b.mlp(tape, b.mlp_norm(tape, h)));
}

Var TransolverModel::forward(Tape& tape, Var features) const {
  if (features.cols() != config_.in_dim) {
    throw ShapeError("transolver: expected " + std::to_string(config_.in_dim) + " input features, got " +
                     std::to_string(features.cols()));
  }
  Var h = embed_(tape, features);
  for (std::size_t l = 0; l < blocks_.size(); ++l) h = block_forward(tape, h, l);
  return head_(tape, h);
}

}  // namespace crash::transolver
