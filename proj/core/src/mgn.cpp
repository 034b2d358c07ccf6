// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/mgn.hpp"

#include <string>

#include "crash/errors.hpp"

namespace crash::mgn {

void MgnConfig::validate() const {
  if (hidden_dim == 0) throw ConfigError("mgn: hidden_dim must be positive");
  if (mlp_layers < 1) throw ConfigError("mgn: mlp_layers must be >= 1");
  if (node_in == 0 || edge_in == 0 || out_dim == 0) throw ConfigError("mgn: feature dims must be non-zero");
}

EdgeIndex EdgeIndex::from(const geometry::Graph& graph) {
  EdgeIndex idx;
  idx.num_nodes = graph.num_nodes;
  idx.src = graph.sources();
  idx.dst = graph.destinations();
  return idx;
}

Var assemble_edge_features(Var current_positions, Var reference_positions, const EdgeIndex& index) {
  Var cur = diff::sub(diff::gather(current_positions, index.dst), diff::gather(current_positions, index.src));
  Var ref = diff::sub(diff::gather(reference_positions, index.dst), diff::gather(reference_positions, index.src));
  return diff::concat({cur, diff::row_norm(cur), ref, diff::row_norm(ref)});
}

Messages compute_messages(Tape& tape, const GraphState& state, const EdgeIndex& index, const MessageFn& phi) {
  Var input = diff::concat({diff::gather(state.nodes, index.dst), diff::gather(state.nodes, index.src), state.edges});
  Messages m;
  m.per_edge = phi(tape, input);
  m.per_node = diff::scatter_sum(m.per_edge, index.dst, index.num_nodes);
  return m;
}

MgnModel::MgnModel(const MgnConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t h = config_.hidden_dim;
  const std::size_t d = config_.mlp_layers;
  const auto act = config_.activation;
  node_encoder_ = nn::Mlp::create(params_, "node_encoder", config_.node_in, h, h, d, act, true, rng);
  edge_encoder_ = nn::Mlp::create(params_, "edge_encoder", config_.edge_in, h, h, d, act, true, rng);
  for (std::size_t l = 0; l < config_.num_mp_layers; ++l) {
    const std::string p = "processor" + std::to_string(l);
    ProcessorLayer layer;
    layer.edge_fn = nn::Mlp::create(params_, p + ".edge", 3 * h, h, h, d, act, true, rng);
    layer.node_fn = nn::Mlp::create(params_, p + ".node", 2 * h, h, h, d, act, true, rng);
    layers_.push_back(std::move(layer));
  }
  decoder_ = nn::Mlp::create(params_, "decoder", h, h, config_.out_dim, d, act, false, rng);
}

GraphState MgnModel::encode(Tape& tape, Var node_features, Var edge_features) const {
  if (node_features.cols() != config_.node_in || edge_features.cols() != config_.edge_in) {
    throw ShapeError("mgn: expected " + std::to_string(config_.node_in) + " node / " +
                     std::to_string(config_.edge_in) + " edge features, got " +
                     std::to_string(node_features.cols()) + " / " + std::to_string(edge_features.cols()));
  }
  return {node_encoder_(tape, node_features), edge_encoder_(tape, edge_features)};
}

GraphState MgnModel::message_pass(Tape& tape, const GraphState& state, const EdgeIndex& index,
                                  std::size_t layer) const {
  const ProcessorLayer& pl = layers_.at(layer);
  Messages m = compute_messages(tape, state, index, [&](Tape& t, Var in) { return pl.edge_fn(t, in); });
  Var update = pl.node_fn(tape, diff::concat({state.nodes, m.per_node}));
  return {diff::add(state.nodes, update), diff::add(state.edges, m.per_edge)};
}

Var MgnModel::decode(Tape& tape, const GraphState& state) const { return decoder_(tape, state.nodes); }

Var MgnModel::forward(Tape& tape, Var node_features, Var edge_features, const EdgeIndex& index) const {
  if (node_features.rows() != index.num_nodes || edge_features.rows() != index.num_edges()) {
    throw ShapeError("mgn: feature rows do not match the graph");
  }
  GraphState s = encode(tape, node_features, edge_features);
  for (std::size_t l = 0; l < layers_.size(); ++l) s = message_pass(tape, s, index, l);
  return decode(tape, s);
}

}  // namespace crash::mgn
