// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "crash/diff/tensor.hpp"

// Mesh and graph construction: cell edges, farthest-point sampling, k-nearest
// neighbour edges, multi-scale graphs and field transfer between the full
// mesh and its sampled subset. All tie-breaking is by smallest index.
namespace crash::geometry {

using Vec3 = std::array<double, 3>;

double squared_distance(const Vec3& a, const Vec3& b) noexcept;

struct Mesh {
  std::vector<Vec3> positions;                  // mm
  std::vector<std::vector<std::size_t>> cells;  // quads or triangles
  std::vector<int> component_id;                // one per node

  std::size_t num_nodes() const noexcept { return positions.size(); }
  // Throws DataError if a cell index is out of range or a node has no component.
  void validate() const;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  auto operator<=>(const Edge&) const = default;
};

// Directed edges; messages flow src -> dst.
struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;

  std::vector<std::size_t> sources() const;
  std::vector<std::size_t> destinations() const;
  std::size_t num_edges() const noexcept { return edges.size(); }
};

// One edge per unique cell side, stored in both directions and sorted.
// Throws DataError on a cell that repeats a vertex.
Graph edges_from_cells(const Mesh& mesh);

// Node with the lexicographically smallest (x, y, z); smallest index on ties.
std::size_t lexicographic_min(std::span<const Vec3> points);

// Greedy maximin sampling: each pick maximizes its distance to the picked set.
std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t count, std::size_t start);

// For every node in `src`, edges to its k nearest nodes from `dst` other than
// itself, ordered by (distance, index). Indices refer to `points`.
std::vector<Edge> knn_edges(std::span<const Vec3> points, std::span<const std::size_t> src,
                            std::span<const std::size_t> dst, std::size_t k);

struct MultiScaleParams {
  double sample_ratio = 0.1;
  std::size_t k_local = 6;
  double longrange_ratio = 0.1;
  std::size_t k_long = 6;
};

// Sampled node set V_s with local edges E_s and long-range edges E_ss. Edge
// endpoints index into the sampled set; sampled_indices maps them back to the
// full mesh.
struct MultiScaleGraph {
  std::vector<std::size_t> sampled_indices;
  std::vector<Edge> local_edges;
  std::vector<Edge> longrange_edges;
  std::vector<std::size_t> hubs;             // sampled-local ids carrying E_ss
  std::vector<std::size_t> full_to_sampled;  // nearest sampled node per full node
  std::vector<Vec3> sampled_positions;       // reference configuration
  std::vector<Vec3> reference_positions;     // full mesh, reference configuration

  std::size_t num_sampled() const noexcept { return sampled_indices.size(); }
  std::size_t num_full() const noexcept { return reference_positions.size(); }
  // E_s and E_ss merged, symmetrized and deduplicated for message passing.
  Graph message_graph() const;
};

MultiScaleGraph build_multiscale_graph(const Mesh& mesh, const MultiScaleParams& params);

// Row-gather of a full-mesh field at the sampled nodes.
diff::Tensor restrict_field(const diff::Tensor& full_values, const MultiScaleGraph& msg);

// Inverse-distance weights from each full node to its nearest sampled nodes,
// measured in the reference configuration.
struct InterpolationStencil {
  std::size_t num_full = 0;
  std::size_t k = 0;
  std::vector<std::size_t> neighbors;  // num_full * k sampled ids
  std::vector<double> weights;         // num_full * k, rows sum to 1
};

InterpolationStencil make_interpolation_stencil(const MultiScaleGraph& msg, std::size_t k_interp);
diff::Tensor apply_interpolation(const InterpolationStencil& stencil, const diff::Tensor& sampled_values);

// Inverse-square-distance weighting over the k_interp nearest sampled nodes;
// a query closer than 1e-9 mm to a sampled node takes that node's value.
diff::Tensor interpolate_field(const diff::Tensor& sampled_values, const MultiScaleGraph& msg, std::size_t k_interp);

// Breadth-first hop counts from `source`; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> hop_distances(const Graph& graph, std::size_t source);

// Positions as an n x 3 tensor and back.
diff::Tensor to_tensor(std::span<const Vec3> points);
std::vector<Vec3> to_points(const diff::Tensor& t);

}  // namespace crash::geometry
