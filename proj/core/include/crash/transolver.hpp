// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "crash/nn.hpp"

// Transolver: per-node features are softly assigned to M slices, pooled into
// M tokens, mixed by multi-head attention over the tokens and broadcast back
// with the same slice weights. Cost is linear in the number of nodes.
namespace crash::transolver {

using diff::Tape;
using diff::Var;

struct TransolverConfig {
  std::size_t num_slices = 128;
  std::size_t num_layers = 6;
  std::size_t hidden_dim = 256;
  std::size_t num_heads = 8;
  double mlp_ratio = 2.0;
  diff::Activation activation = diff::Activation::gelu;
  std::size_t in_dim = 8;
  std::size_t out_dim = 3;

  std::size_t head_dim() const { return hidden_dim / num_heads; }
  // Throws ConfigError unless hidden_dim % num_heads == 0 and M >= 1.
  void validate() const;
};

// Per-head query/key/value maps act on that head's channel slice.
struct TokenAttention {
  std::vector<nn::Linear> query;
  std::vector<nn::Linear> key;
  std::vector<nn::Linear> value;
  nn::Linear output;
};

struct Block {
  nn::LayerNorm attn_norm;
  nn::Linear slice_proj;
  TokenAttention attention;
  nn::LayerNorm mlp_norm;
  nn::Mlp mlp;
};

// Slice masses below this produce a zero token.
inline constexpr double kSliceMassFloor = 1e-12;

// w = softmax(P x) over slices; N x M, rows sum to one.
Var slice_weights(Tape& tape, Var x, const nn::Linear& proj);

// z_j = sum_i w_ij x_i / sum_i w_ij; M x c.
Var encode_tokens(Var x, Var weights);

// Multi-head self-attention over the M tokens with scale 1/sqrt(head_dim).
// When `attention_maps` is given, the per-head M x M softmax matrices are
// appended to it.
Var token_attention(Tape& tape, Var tokens, const TokenAttention& params, double scale,
                    std::vector<Var>* attention_maps = nullptr);

// x'_i = sum_j w_ij z'_j; N x c.
Var deslice(Var weights, Var tokens);

class TransolverModel {
 public:
  TransolverModel(const TransolverConfig& config, std::uint64_t seed);

  const TransolverConfig& config() const noexcept { return config_; }
  diff::ParameterSet& params() noexcept { return params_; }
  const diff::ParameterSet& params() const noexcept { return params_; }

  // slice_weights -> encode_tokens -> token_attention -> deslice.
  Var physics_attention(Tape& tape, Var x, const Block& block) const;
  // Pre-norm residual block: x + PA(LN(x)), then h + MLP(LN(h)).
  Var block_forward(Tape& tape, Var x, std::size_t layer) const;
  // Embed -> blocks -> linear head; N x in_dim to N x out_dim.
  Var forward(Tape& tape, Var features) const;

  Block& block(std::size_t i) { return blocks_.at(i); }
  const Block& block(std::size_t i) const { return blocks_.at(i); }
  std::size_t num_blocks() const noexcept { return blocks_.size(); }
  nn::Linear& embed() noexcept { return embed_; }
  nn::Linear& head() noexcept { return head_; }

 private:
  TransolverConfig config_;
  diff::ParameterSet params_;
  nn::Linear embed_;
  std::vector<Block> blocks_;
  nn::Linear head_;
};

}  // namespace crash::transolver
