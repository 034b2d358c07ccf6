// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <string>
#include <utility>

#include "crash/errors.hpp"

namespace crash::geometry {

double squared_distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

void Mesh::validate() const {
  const std::size_t n = positions.size();
  if (component_id.size() != n) {
    throw DataError("mesh has " + std::to_string(n) + " nodes but " + std::to_string(component_id.size()) +
                    " component ids");
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t v : cells[c]) {
      if (v >= n) throw DataError("cell " + std::to_string(c) + " references node " + std::to_string(v));
    }
  }
}

std::vector<std::size_t> Graph::sources() const {
  std::vector<std::size_t> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) out[i] = edges[i].src;
  return out;
}

std::vector<std::size_t> Graph::destinations() const {
  std::vector<std::size_t> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) out[i] = edges[i].dst;
  return out;
}

Graph edges_from_cells(const Mesh& mesh) {
  mesh.validate();
  std::set<std::pair<std::size_t, std::size_t>> sides;
  for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
    const auto& cell = mesh.cells[c];
    for (std::size_t i = 0; i < cell.size(); ++i) {
      for (std::size_t j = i + 1; j < cell.size(); ++j) {
        if (cell[i] == cell[j]) throw DataError("degenerate cell " + std::to_string(c) + ": repeated vertex");
      }
    }
    for (std::size_t i = 0; i < cell.size(); ++i) {
      const std::size_t a = cell[i];
      const std::size_t b = cell[(i + 1) % cell.size()];
      sides.emplace(std::min(a, b), std::max(a, b));
    }
  }
  Graph g;
  g.num_nodes = mesh.num_nodes();
  g.edges.reserve(sides.size() * 2);
  for (const auto& [a, b] : sides) {
    g.edges.push_back({a, b});
    g.edges.push_back({b, a});
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

std::size_t lexicographic_min(std::span<const Vec3> points) {
  if (points.empty()) throw ConfigError("lexicographic_min of an empty point set");
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i] < points[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> farthest_point_sampling(std::span<const Vec3> points, std::size_t count, std::size_t start) {
  const std::size_t n = points.size();
  if (count == 0 || count > n) {
    throw ConfigError("farthest_point_sampling: cannot pick " + std::to_string(count) + " of " + std::to_string(n) +
                      " points");
  }
  if (start >= n) throw IndexError("farthest_point_sampling: start index " + std::to_string(start) + " out of range");
  std::vector<std::size_t> picked{start};
  picked.reserve(count);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  taken[start] = 1;
  std::size_t last = start;
  while (picked.size() < count) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      nearest[i] = std::min(nearest[i], squared_distance(points[i], points[last]));
      if (nearest[i] > best_d) {
        best_d = nearest[i];
        best = i;
      }
    }
    taken[best] = 1;
    picked.push_back(best);
    last = best;
  }
  return picked;
}

std::vector<Edge> knn_edges(std::span<const Vec3> points, std::span<const std::size_t> src,
                            std::span<const std::size_t> dst, std::size_t k) {
  for (std::size_t i : src) {
    if (i >= points.size()) throw IndexError("knn_edges: source index " + std::to_string(i) + " out of range");
  }
  for (std::size_t j : dst) {
    if (j >= points.size()) throw IndexError("knn_edges: candidate index " + std::to_string(j) + " out of range");
  }
  std::vector<Edge> edges;
  edges.reserve(src.size() * k);
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t s : src) {
    cand.clear();
    for (std::size_t d : dst) {
      if (d != s) cand.emplace_back(squared_distance(points[s], points[d]), d);
    }
    if (k > cand.size()) {
      throw ConfigError("knn_edges: k=" + std::to_string(k) + " exceeds the " + std::to_string(cand.size()) +
                        " available neighbours");
    }
    std::partial_sort(cand.begin(), cand.begin() + std::ptrdiff_t(k), cand.end());
    for (std::size_t r = 0; r < k; ++r) edges.push_back({s, cand[r].second});
  }
  return edges;
}

Graph MultiScaleGraph::message_graph() const {
  std::set<Edge> unique;
  auto insert = [&unique](const Edge& e) {
    unique.insert(e);
    unique.insert({e.dst, e.src});
  };
  for (const Edge& e : local_edges) insert(e);
  for (const Edge& e : longrange_edges) insert(e);
  Graph g;
  g.num_nodes = sampled_indices.size();
  g.edges.assign(unique.begin(), unique.end());
  return g;
}

MultiScaleGraph build_multiscale_graph(const Mesh& mesh, const MultiScaleParams& params) {
  mesh.validate();
  const std::size_t n = mesh.num_nodes();
  if (!(params.sample_ratio > 0.0 && params.sample_ratio <= 1.0)) {
    throw ConfigError("multiscale sample_ratio must lie in (0, 1]");
  }
  if (!(params.longrange_ratio >= 0.0 && params.longrange_ratio <= 1.0)) {
    throw ConfigError("multiscale longrange_ratio must lie in [0, 1]");
  }
  const auto m = std::max<std::size_t>(1, std::size_t(std::llround(double(n) * params.sample_ratio)));
  if (params.k_local == 0 || params.k_local >= m) {
    throw ConfigError("multiscale graph: " + std::to_string(m) + " sampled nodes are too few for k_local=" +
                      std::to_string(params.k_local));
  }

  MultiScaleGraph g;
  g.reference_positions = mesh.positions;
  g.sampled_indices = farthest_point_sampling(mesh.positions, m, lexicographic_min(mesh.positions));
  g.sampled_positions.reserve(m);
  for (std::size_t i : g.sampled_indices) g.sampled_positions.push_back(mesh.positions[i]);

  std::vector<std::size_t> local(m);
  std::iota(local.begin(), local.end(), std::size_t{0});
  g.local_edges = knn_edges(g.sampled_positions, local, local, params.k_local);

  const auto hub_count = std::size_t(std::llround(double(m) * params.longrange_ratio));
  if (hub_count >= 2 && params.k_long > 0) {
    g.hubs = farthest_point_sampling(g.sampled_positions, hub_count, lexicographic_min(g.sampled_positions));
    const std::size_t k_eff = std::min(params.k_long, hub_count - 1);
    const std::set<Edge> existing(g.local_edges.begin(), g.local_edges.end());
    for (const Edge& e : knn_edges(g.sampled_positions, g.hubs, g.hubs, k_eff)) {
      if (!existing.contains(e)) g.longrange_edges.push_back(e);
    }
  }

  g.full_to_sampled.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < m; ++s) {
      const double d = squared_distance(mesh.positions[i], g.sampled_positions[s]);
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    g.full_to_sampled[i] = best;
  }
  return g;
}

diff::Tensor restrict_field(const diff::Tensor& full_values, const MultiScaleGraph& msg) {
  if (full_values.rows() != msg.num_full()) {
    throw ShapeError("restrict_field: field has " + std::to_string(full_values.rows()) + " rows, mesh has " +
                     std::to_string(msg.num_full()) + " nodes");
  }
  const std::size_t c = full_values.cols();
  diff::Tensor out = diff::Tensor::zeros(msg.num_sampled(), c);
  for (std::size_t r = 0; r < msg.num_sampled(); ++r) {
    std::copy_n(full_values.data() + msg.sampled_indices[r] * c, c, out.data() + r * c);
  }
  return out;
}

InterpolationStencil make_interpolation_stencil(const MultiScaleGraph& msg, std::size_t k_interp) {
  if (k_interp == 0) throw ConfigError("interpolation needs k_interp >= 1");
  const std::size_t m = msg.num_sampled();
  const std::size_t k = std::min(k_interp, m);
  InterpolationStencil s;
  s.num_full = msg.num_full();
  s.k = k;
  s.neighbors.resize(s.num_full * k);
  s.weights.resize(s.num_full * k);
  std::vector<std::pair<double, std::size_t>> cand(m);
  for (std::size_t i = 0; i < s.num_full; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      cand[j] = {squared_distance(msg.reference_positions[i], msg.sampled_positions[j]), j};
    }
    std::partial_sort(cand.begin(), cand.begin() + std::ptrdiff_t(k), cand.end());
    double* w = s.weights.data() + i * k;
    std::size_t* nb = s.neighbors.data() + i * k;
    if (std::sqrt(cand[0].first) < 1e-9) {
      for (std::size_t r = 0; r < k; ++r) {
        nb[r] = cand[r].second;
        w[r] = r == 0 ? 1.0 : 0.0;
      }
      continue;
    }
    double total = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      nb[r] = cand[r].second;
      w[r] = 1.0 / cand[r].first;
      total += w[r];
    }
    for (std::size_t r = 0; r < k; ++r) w[r] /= total;
  }
  return s;
}

diff::Tensor apply_interpolation(const InterpolationStencil& stencil, const diff::Tensor& sampled_values) {
  const std::size_t c = sampled_values.cols();
  diff::Tensor out = diff::Tensor::zeros(stencil.num_full, c);
  for (std::size_t i = 0; i < stencil.num_full; ++i) {
    for (std::size_t r = 0; r < stencil.k; ++r) {
      const double w = stencil.weights[i * stencil.k + r];
      if (w == 0.0) continue;
      const std::size_t s = stencil.neighbors[i * stencil.k + r];
      if (s >= sampled_values.rows()) throw ShapeError("interpolation: sampled field has too few rows");
      for (std::size_t j = 0; j < c; ++j) out.at(i, j) += w * sampled_values.at(s, j);
    }
  }
  return out;
}

diff::Tensor interpolate_field(const diff::Tensor& sampled_values, const MultiScaleGraph& msg, std::size_t k_interp) {
  if (sampled_values.rows() != msg.num_sampled()) {
    throw ShapeError("interpolate_field: expected " + std::to_string(msg.num_sampled()) + " sampled rows");
  }
  return apply_interpolation(make_interpolation_stencil(msg, k_interp), sampled_values);
}

std::vector<std::size_t> hop_distances(const Graph& graph, std::size_t source) {
  if (source >= graph.num_nodes) throw IndexError("hop_distances: source out of range");
  std::vector<std::vector<std::size_t>> adj(graph.num_nodes);
  for (const Edge& e : graph.edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::vector<std::size_t> dist(graph.num_nodes, std::numeric_limits<std::size_t>::max());
  std::queue<std::size_t> q;
  dist[source] = 0;
  q.push(source);
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v : adj[u]) {
      if (dist[v] == std::numeric_limits<std::size_t>::max()) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

diff::Tensor to_tensor(std::span<const Vec3> points) {
  diff::Tensor t = diff::Tensor::zeros(points.size(), 3);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) t.at(i, k) = points[i][k];
  }
  return t;
}

std::vector<Vec3> to_points(const diff::Tensor& t) {
  if (t.cols() != 3) throw ShapeError("to_points expects an n x 3 tensor");
  std::vector<Vec3> out(t.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {t.at(i, 0), t.at(i, 1), t.at(i, 2)};
  return out;
}

}  // namespace crash::geometry
