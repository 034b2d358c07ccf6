// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "crash/geometry.hpp"
#include "crash/nn.hpp"

// MeshGraphNet encode-process-decode on a directed graph.
namespace crash::mgn {

using diff::Tape;
using diff::Var;

struct MgnConfig {
  std::size_t num_mp_layers = 15;
  std::size_t hidden_dim = 128;
  std::size_t mlp_layers = 2;
  diff::Activation activation = diff::Activation::relu;
  std::size_t node_in = 5;
  std::size_t edge_in = 8;
  std::size_t out_dim = 3;

  void validate() const;
};

// Source and destination index columns of a graph, built once and reused.
struct EdgeIndex {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;

  static EdgeIndex from(const geometry::Graph& graph);
  std::size_t num_edges() const noexcept { return src.size(); }
};

struct GraphState {
  Var nodes;  // n x hidden
  Var edges;  // e x hidden
};

// Per edge (i -> j): [x_j - x_i, |x_j - x_i|, X_j - X_i, |X_j - X_i|] with x the
// current and X the reference positions.
Var assemble_edge_features(Var current_positions, Var reference_positions, const EdgeIndex& index);

// m_ij = phi(h_dst, h_src, e_ij); the per-edge input is the concatenation.
using MessageFn = std::function<Var(Tape&, Var edge_input)>;

struct Messages {
  Var per_edge;  // m_ij
  Var per_node;  // sum of m_ij over incoming edges
};

Messages compute_messages(Tape& tape, const GraphState& state, const EdgeIndex& index, const MessageFn& phi);

struct ProcessorLayer {
  nn::Mlp edge_fn;
  nn::Mlp node_fn;
};

class MgnModel {
 public:
  MgnModel(const MgnConfig& config, std::uint64_t seed);

  const MgnConfig& config() const noexcept { return config_; }
  diff::ParameterSet& params() noexcept { return params_; }
  const diff::ParameterSet& params() const noexcept { return params_; }

  GraphState encode(Tape& tape, Var node_features, Var edge_features) const;
  // One residual message-passing layer.
  GraphState message_pass(Tape& tape, const GraphState& state, const EdgeIndex& index, std::size_t layer) const;
  Var decode(Tape& tape, const GraphState& state) const;

  Var forward(Tape& tape, Var node_features, Var edge_features, const EdgeIndex& index) const;

  ProcessorLayer& layer(std::size_t i) { return layers_.at(i); }
  nn::Mlp& node_encoder() noexcept { return node_encoder_; }
  nn::Mlp& edge_encoder() noexcept { return edge_encoder_; }
  nn::Mlp& decoder() noexcept { return decoder_; }

 private:
  MgnConfig config_;
  diff::ParameterSet params_;
  nn::Mlp node_encoder_;
  nn::Mlp edge_encoder_;
  std::vector<ProcessorLayer> layers_;
  nn::Mlp decoder_;
};

}  // namespace crash::mgn
