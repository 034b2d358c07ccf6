// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "../support/printers.hpp"
#include "crash/datagen.hpp"
#include "crash/diff/grad_check.hpp"
#include "crash/errors.hpp"
#include "crash/mgn.hpp"

namespace {

using namespace crash;
using namespace crash::diff;
using namespace crash::mgn;
using geometry::Edge;
using geometry::Graph;
using geometry::Mesh;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

MgnConfig small_config(std::size_t layers) {
  MgnConfig c;
  c.num_mp_layers = layers;
  c.hidden_dim = 6;
  c.node_in = 4;
  c.edge_in = 8;
  return c;
}

EdgeIndex index_of(std::size_t n, std::vector<Edge> edges) {
  Graph g;
  g.num_nodes = n;
  g.edges = std::move(edges);
  return EdgeIndex::from(g);
}

// Path 0 - 1 - ... - (n-1), both directions.
EdgeIndex path(std::size_t n) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    e.push_back({i, i + 1});
    e.push_back({i + 1, i});
  }
  return index_of(n, e);
}

TEST(EdgeFeatures, TwoNodeExample) {
  Tape tape;
  const auto idx = index_of(2, {{0, 1}});
  Var f = assemble_edge_features(tape.constant(Tensor::from_rows({{0, 0, 0}, {3, 4, 0}})),
                                 tape.constant(Tensor::from_rows({{0, 0, 0}, {1, 0, 0}})), idx);
  EXPECT_EQ(f.value(), Tensor::from_rows({{3, 4, 0, 5, 1, 0, 0, 1}}));
}

TEST(EdgeFeatures, RigidTranslationInvariant) {
  Rng rng(1);
  const auto idx = path(6);
  Tensor x = random_tensor(6, 3, rng);
  Tensor x_ref = random_tensor(6, 3, rng);
  Tensor xs = x, xs_ref = x_ref;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      xs.at(i, c) += 100.0 + double(c);
      xs_ref.at(i, c) -= 7.0;
    }
  }
  Tape tape;
  const Tensor a = assemble_edge_features(tape.constant(x), tape.constant(x_ref), idx).value();
  const Tensor b = assemble_edge_features(tape.constant(xs), tape.constant(xs_ref), idx).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(ComputeMessages, StubSumsSourceFeatures) {
  const auto idx = index_of(4, {{0, 2}, {1, 2}, {2, 0}});
  Tape tape;
  const Tensor h = Tensor::from_rows({{1, 10}, {2, 20}, {3, 30}, {4, 40}});
  GraphState s{tape.constant(h), tape.constant(Tensor::zeros(3, 2))};
  // Input columns are (h_dst, h_src, e); keep the h_src block.
  Messages m = compute_messages(tape, s, idx, [](Tape&, Var in) { return slice_cols(in, 2, 4); });
  EXPECT_EQ(m.per_edge.value(), Tensor::from_rows({{1, 10}, {2, 20}, {3, 30}}));
  EXPECT_EQ(m.per_node.value(), Tensor::from_rows({{3, 30}, {0, 0}, {3, 30}, {0, 0}}));
}

TEST(ComputeMessages, OrderIsDestinationSourceEdge) {
  const auto idx = index_of(2, {{0, 1}});
  Tape tape;
  GraphState s{tape.constant(Tensor::from_rows({{1}, {2}})), tape.constant(Tensor::from_rows({{9}}))};
  Messages m = compute_messages(tape, s, idx, [](Tape&, Var in) { return in; });
  EXPECT_EQ(m.per_edge.value(), Tensor::from_rows({{2, 1, 9}}));
}

TEST(MgnModel, IsolatedNodeSeesOnlyItself) {
  MgnModel model(small_config(3), 2);
  Rng rng(3);
  // Node 3 has no edges.
  const auto idx = index_of(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  Tensor nodes = random_tensor(4, 4, rng);
  const Tensor edges = random_tensor(4, 8, rng);
  Tape tape;
  const Tensor y = model.forward(tape, tape.constant(nodes), tape.constant(edges), idx).value();
  for (std::size_t c = 0; c < 4; ++c) nodes.at(0, c) += 1.0;
  const Tensor y2 = model.forward(tape, tape.constant(nodes), tape.constant(edges), idx).value();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(y.at(3, c), y2.at(3, c));
  // Same isolated node on an empty graph.
  const auto lone = index_of(1, {});
  Tensor one = Tensor::zeros(1, 4);
  for (std::size_t c = 0; c < 4; ++c) one.at(0, c) = nodes.at(3, c);
  const Tensor y3 = model.forward(tape, tape.constant(one), tape.constant(Tensor::zeros(0, 8)), lone).value();
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y3.at(0, c), y.at(3, c), 1e-12);
}

TEST(MgnModel, ReceptiveFieldIsLayerCountHops) {
  const std::size_t layers = 3;
  MgnModel model(small_config(layers), 4);
  Rng rng(5);
  const std::size_t n = 10;
  const auto idx = path(n);
  Tensor nodes = random_tensor(n, 4, rng);
  const Tensor edges = random_tensor(idx.num_edges(), 8, rng);
  Tape tape;
  const Tensor y = model.forward(tape, tape.constant(nodes), tape.constant(edges), idx).value();
  for (std::size_t c = 0; c < 4; ++c) nodes.at(0, c) += 0.5;
  const Tensor y2 = model.forward(tape, tape.constant(nodes), tape.constant(edges), idx).value();
  for (std::size_t i = 0; i < n; ++i) {
    bool same = true;
    for (std::size_t c = 0; c < 3; ++c) same &= y.at(i, c) == y2.at(i, c);
    if (i <= layers) {
      EXPECT_FALSE(same) << "node " << i;
    } else {
      EXPECT_TRUE(same) << "node " << i;
    }
  }
}

TEST(MgnModel, NodeAndEdgePermutationEquivariance) {
  MgnModel model(small_config(2), 6);
  Rng rng(7);
  const Mesh m = datagen::build_sheet_mesh(4, 3, 1.0, 1);
  const Graph g = geometry::edges_from_cells(m);
  const std::size_t n = g.num_nodes;
  std::vector<std::size_t> perm(n);  // new id -> old id
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  std::vector<std::size_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = i;

  const Tensor nodes = random_tensor(n, 4, rng);
  const Tensor edges = random_tensor(g.num_edges(), 8, rng);
  Graph gp;
  gp.num_nodes = n;
  std::vector<std::size_t> eperm(g.num_edges());
  std::iota(eperm.begin(), eperm.end(), std::size_t{0});
  std::reverse(eperm.begin(), eperm.end());
  Tensor ep = Tensor::zeros(g.num_edges(), 8);
  for (std::size_t k = 0; k < eperm.size(); ++k) {
    const Edge& e = g.edges[eperm[k]];
    gp.edges.push_back({inv[e.src], inv[e.dst]});
    for (std::size_t c = 0; c < 8; ++c) ep.at(k, c) = edges.at(eperm[k], c);
  }
  Tensor np = Tensor::zeros(n, 4);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 4; ++c) np.at(i, c) = nodes.at(perm[i], c);
  }
  Tape tape;
  const Tensor y = model.forward(tape, tape.constant(nodes), tape.constant(edges), EdgeIndex::from(g)).value();
  const Tensor yp = model.forward(tape, tape.constant(np), tape.constant(ep), EdgeIndex::from(gp)).value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(yp.at(i, c), y.at(perm[i], c), 1e-9);
  }
}

TEST(MgnModel, ShapeChecks) {
  MgnModel model(small_config(1), 8);
  const auto idx = path(3);
  Tape tape;
  EXPECT_THROW(model.forward(tape, tape.constant(Tensor::zeros(3, 5)), tape.constant(Tensor::zeros(4, 8)), idx),
               ShapeError);
  EXPECT_THROW(model.forward(tape, tape.constant(Tensor::zeros(3, 4)), tape.constant(Tensor::zeros(3, 8)), idx),
               ShapeError);
  EXPECT_EQ(model.forward(tape, tape.constant(Tensor::zeros(3, 4)), tape.constant(Tensor::zeros(4, 8)), idx).shape(),
            (Shape{3, 3}));
}

TEST(MgnModel, GradientMatchesFiniteDifferences) {
  MgnConfig cfg = small_config(2);
  cfg.hidden_dim = 4;
  cfg.activation = Activation::gelu;  // smooth, so central differences are clean
  MgnModel model(cfg, 9);
  Rng rng(10);
  const auto idx = path(10);
  const Tensor nodes = random_tensor(10, 4, rng);
  const Tensor edges = random_tensor(idx.num_edges(), 8, rng);
  const Tensor target = random_tensor(10, 3, rng);
  std::vector<Parameter*> list;
  for (auto& p : model.params()) list.push_back(&p);
  auto res = grad_check(
      [&](Tape& t) {
        return mean_square(sub(model.forward(t, t.constant(nodes), t.constant(edges), idx), t.constant(target)));
      },
      list, 1e-5, 1e-6);
  EXPECT_LT(res.max_rel_error, 1e-4);
  EXPECT_EQ(res.checked, model.params().total_values());
}

TEST(MgnModel, GradientReachesInputPositions) {
  MgnConfig cfg = small_config(1);
  cfg.activation = Activation::gelu;
  MgnModel model(cfg, 11);
  Rng rng(12);
  const auto idx = path(5);
  const Tensor ref = random_tensor(5, 3, rng);
  ParameterSet ps;
  Parameter& x = ps.add("x", random_tensor(5, 3, rng));
  std::vector<Parameter*> list{&x};
  for (auto& p : model.params()) list.push_back(&p);
  auto res = grad_check(
      [&](Tape& t) {
        Var e = assemble_edge_features(t.param(x), t.constant(ref), idx);
        return sum(model.forward(t, t.constant(Tensor::zeros(5, 4)), e, idx));
      },
      list, 1e-5, 1e-6);
  EXPECT_LT(res.max_rel_error, 1e-4);
}

}  // namespace
