// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "../support/oracles.hpp"
#include "../support/printers.hpp"
#include "crash/datagen.hpp"
#include "crash/errors.hpp"
#include "crash/geometry.hpp"

namespace {

using namespace crash;
using namespace crash::geometry;

Mesh quad_mesh(std::vector<std::vector<std::size_t>> cells, std::size_t n) {
  Mesh m;
  for (std::size_t i = 0; i < n; ++i) m.positions.push_back({double(i), 0.0, 0.0});
  m.cells = std::move(cells);
  m.component_id.assign(n, 0);
  return m;
}

std::set<std::pair<std::size_t, std::size_t>> as_set(const std::vector<Edge>& e) {
  std::set<std::pair<std::size_t, std::size_t>> s;
  for (const auto& x : e) s.insert({x.src, x.dst});
  return s;
}

TEST(EdgesFromCells, SingleQuadPerimeter) {
  const Graph g = edges_from_cells(quad_mesh({{0, 1, 2, 3}}, 4));
  const std::set<std::pair<std::size_t, std::size_t>> expect{{0, 1}, {1, 0}, {1, 2}, {2, 1},
                                                             {2, 3}, {3, 2}, {3, 0}, {0, 3}};
  EXPECT_EQ(as_set(g.edges), expect);
  EXPECT_EQ(g.num_edges(), 8u);
}

TEST(EdgesFromCells, SharedSideAppearsOncePerDirection) {
  const Graph g = edges_from_cells(quad_mesh({{0, 1, 2, 3}, {1, 4, 5, 2}}, 6));
  EXPECT_EQ(std::count(g.edges.begin(), g.edges.end(), Edge{1, 2}), 1);
  EXPECT_EQ(std::count(g.edges.begin(), g.edges.end(), Edge{2, 1}), 1);
  EXPECT_EQ(g.num_edges(), 14u);
}

TEST(EdgesFromCells, ThreeByThreeSheet) {
  const Mesh m = datagen::build_sheet_mesh(3, 3, 1.0, 1);
  EXPECT_EQ(edges_from_cells(m).num_edges(), 24u);
}

TEST(EdgesFromCells, DegenerateCellThrows) {
  EXPECT_THROW(edges_from_cells(quad_mesh({{0, 1, 1, 2}}, 3)), DataError);
}

TEST(Fps, CollinearExample) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {10, 0, 0}};
  EXPECT_EQ(farthest_point_sampling(pts, 3, 0), (std::vector<std::size_t>{0, 3, 2}));
}

TEST(Fps, AllPointsDeterministic) {
  Rng rng(2);
  const auto pts = oracle::random_points(20, rng);
  const auto a = farthest_point_sampling(pts, 20, 0);
  EXPECT_EQ(a, farthest_point_sampling(pts, 20, 0));
  std::set<std::size_t> s(a.begin(), a.end());
  EXPECT_EQ(s.size(), 20u);
}

TEST(Fps, TooManyThrows) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(farthest_point_sampling(pts, 3, 0), ConfigError);
}

TEST(Fps, MatchesGreedyMaximinOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + rng.below(63);
    const auto pts = seed % 2 ? oracle::lattice_points(n, rng) : oracle::random_points(n, rng);
    const std::size_t m = 1 + rng.below(n);
    const std::size_t start = lexicographic_min(pts);
    EXPECT_EQ(farthest_point_sampling(pts, m, start), oracle::greedy_maximin(pts, m, start)) << "seed " << seed;
  }
}

TEST(Fps, BeatsRandomSubsets) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto pts = oracle::random_points(60, rng);
    const auto sel = farthest_point_sampling(pts, 8, lexicographic_min(pts));
    const double fps_d = oracle::min_pairwise(pts, sel);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::size_t> idx(60);
      for (std::size_t i = 0; i < 60; ++i) idx[i] = i;
      for (std::size_t i = 60; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
      idx.resize(8);
      // Greedy maximin is a 2-approximation of the optimum, so a random
      // subset can at most double its separation.
      EXPECT_GE(2.0 * fps_d, oracle::min_pairwise(pts, idx));
    }
  }
}

TEST(LexicographicMin, TieGoesToSmallestIndex) {
  const std::vector<Vec3> pts{{1, 0, 0}, {0, 1, 0}, {0, 0, 5}, {0, 0, 5}};
  EXPECT_EQ(lexicographic_min(pts), 2u);
}

TEST(Knn, CollinearTieGoesToSmallerIndex) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const std::vector<std::size_t> all{0, 1, 2};
  const auto e = knn_edges(pts, all, all, 1);
  EXPECT_EQ(e[1], (Edge{1, 0}));
}

TEST(Knn, KEqualsCandidatesGivesCompleteGraph) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {5, 2, 0}};
  const std::vector<std::size_t> all{0, 1, 2};
  EXPECT_EQ(knn_edges(pts, all, all, 2).size(), 6u);
  EXPECT_THROW(knn_edges(pts, all, all, 3), ConfigError);
}

TEST(Knn, MatchesBruteForceSort) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(1000 + seed);
    const std::size_t n = 4 + rng.below(120);
    const auto pts = seed % 2 ? oracle::lattice_points(n, rng) : oracle::random_points(n, rng);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    const std::size_t k = 1 + rng.below(std::min<std::size_t>(n - 1, 8));
    EXPECT_EQ(knn_edges(pts, all, all, k), oracle::brute_knn(pts, all, all, k)) << "seed " << seed;
  }
}

Mesh sheet(std::size_t nx, std::size_t ny) { return datagen::build_sheet_mesh(nx, ny, 10.0, 1); }

TEST(MultiScale, FullRatioWithoutLongRange) {
  const Mesh m = sheet(5, 5);
  const auto g = build_multiscale_graph(m, {1.0, 4, 0.01, 2});
  EXPECT_EQ(g.num_sampled(), 25u);
  EXPECT_TRUE(g.longrange_edges.empty());
  EXPECT_EQ(g.local_edges.size(), 25u * 4u);
}

TEST(MultiScale, HundredNodeSheetOutDegree) {
  const Mesh m = sheet(10, 10);
  const auto g = build_multiscale_graph(m, {0.1, 4, 0.1, 6});
  EXPECT_EQ(g.num_sampled(), 10u);
  std::vector<std::size_t> degree(10, 0);
  for (const auto& e : g.local_edges) ++degree[e.src];
  for (auto d : degree) EXPECT_EQ(d, 4u);
}

TEST(MultiScale, StructuralInvariants) {
  const Mesh m = sheet(21, 21);
  const auto g = build_multiscale_graph(m, {});
  std::set<std::size_t> sampled(g.sampled_indices.begin(), g.sampled_indices.end());
  EXPECT_EQ(sampled.size(), g.num_sampled());
  EXPECT_EQ(g.num_sampled(), 44u);
  for (auto i : g.sampled_indices) EXPECT_LT(i, m.num_nodes());
  const std::set<std::size_t> hubs(g.hubs.begin(), g.hubs.end());
  for (const auto& e : g.longrange_edges) {
    EXPECT_TRUE(hubs.count(e.src));
    EXPECT_TRUE(hubs.count(e.dst));
    EXPECT_LT(e.src, g.num_sampled());
  }
  const auto local = as_set(g.local_edges);
  for (const auto& e : g.longrange_edges) EXPECT_FALSE(local.count({e.src, e.dst}));
  EXPECT_EQ(g.full_to_sampled.size(), m.num_nodes());
  for (std::size_t s = 0; s < g.num_sampled(); ++s) EXPECT_EQ(g.full_to_sampled[g.sampled_indices[s]], s);
  const Graph mg = g.message_graph();
  const auto ms = as_set(mg.edges);
  EXPECT_EQ(ms.size(), mg.num_edges());
  for (const auto& e : mg.edges) EXPECT_TRUE(ms.count({e.dst, e.src}));
}

TEST(MultiScale, Deterministic) {
  const Mesh m = sheet(12, 9);
  const auto a = build_multiscale_graph(m, {});
  const auto b = build_multiscale_graph(m, {});
  EXPECT_EQ(a.sampled_indices, b.sampled_indices);
  EXPECT_EQ(a.local_edges, b.local_edges);
  EXPECT_EQ(a.longrange_edges, b.longrange_edges);
}

TEST(MultiScale, SampleTooSmallThrows) {
  EXPECT_THROW(build_multiscale_graph(sheet(3, 3), {0.2, 6, 0.1, 6}), ConfigError);
}

TEST(FieldTransfer, RestrictGathersRows) {
  MultiScaleGraph g;
  g.sampled_indices = {2, 0};
  g.reference_positions = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const auto r = restrict_field(diff::Tensor::from_rows({{1}, {2}, {3}}), g);
  EXPECT_EQ(r, diff::Tensor::from_rows({{3}, {1}}));
}

TEST(FieldTransfer, MidpointInterpolation) {
  MultiScaleGraph g;
  g.sampled_indices = {0, 2};
  g.reference_positions = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  g.sampled_positions = {{0, 0, 0}, {2, 0, 0}};
  const auto out = interpolate_field(diff::Tensor::from_rows({{0}, {4}}), g, 2);
  EXPECT_DOUBLE_EQ(out.at(1, 0), 2.0);
  EXPECT_EQ(out.at(0, 0), 0.0);
  EXPECT_EQ(out.at(2, 0), 4.0);
}

TEST(FieldTransfer, RestrictThenInterpolateIsIdentityAtSamples) {
  const Mesh m = sheet(11, 11);
  const auto g = build_multiscale_graph(m, {});
  Rng rng(4);
  diff::Tensor field = diff::Tensor::zeros(m.num_nodes(), 3);
  for (double& v : field.values()) v = rng.uniform(-5, 5);
  const auto back = interpolate_field(restrict_field(field, g), g, 4);
  for (auto i : g.sampled_indices) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(back.at(i, c), field.at(i, c));
  }
}

TEST(FieldTransfer, ConstantFieldsStayConstant) {
  const Mesh m = sheet(11, 11);
  const auto g = build_multiscale_graph(m, {});
  const diff::Tensor c(diff::Shape{m.num_nodes(), 2}, 7.25);
  const auto r = restrict_field(c, g);
  for (double v : r.values()) EXPECT_EQ(v, 7.25);
  const auto up = interpolate_field(r, g, 4);
  for (double v : up.values()) EXPECT_NEAR(v, 7.25, 1e-12);
}

TEST(FieldTransfer, InterpolationIsConvex) {
  const Mesh m = sheet(15, 15);
  const auto g = build_multiscale_graph(m, {});
  const auto stencil = make_interpolation_stencil(g, 4);
  Rng rng(6);
  diff::Tensor s = diff::Tensor::zeros(g.num_sampled(), 2);
  for (double& v : s.values()) v = rng.uniform(-1, 1);
  const auto out = apply_interpolation(stencil, s);
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t k = 0; k < stencil.k; ++k) {
        const double v = s.at(stencil.neighbors[i * stencil.k + k], c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      EXPECT_GE(out.at(i, c), lo - 1e-12);
      EXPECT_LE(out.at(i, c), hi + 1e-12);
    }
  }
}

TEST(HopDistances, Sheet) {
  const Mesh m = sheet(4, 3);
  const auto h = hop_distances(edges_from_cells(m), 0);
  EXPECT_EQ(h[0], 0u);
  EXPECT_EQ(h[3], 3u);
  EXPECT_EQ(h[11], 5u);
}

}  // namespace
