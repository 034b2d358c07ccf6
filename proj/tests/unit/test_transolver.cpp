// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../support/printers.hpp"
#include "crash/diff/grad_check.hpp"
#include "crash/errors.hpp"
#include "crash/transolver.hpp"

namespace {

using namespace crash;
using namespace crash::diff;
using namespace crash::transolver;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

TransolverConfig small_config() {
  TransolverConfig c;
  c.num_slices = 4;
  c.num_layers = 2;
  c.hidden_dim = 8;
  c.num_heads = 2;
  c.in_dim = 5;
  c.out_dim = 3;
  return c;
}

TEST(TransolverConfig, RejectsIndivisibleHeads) {
  TransolverConfig c = small_config();
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(TransolverModel(c, 0), ConfigError);
  c = small_config();
  c.num_slices = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SliceWeights, RowsAreDistributions) {
  Rng rng(3);
  ParameterSet ps;
  const auto proj = nn::Linear::create(ps, "p", 6, 5, rng);
  Tape tape;
  Var w = slice_weights(tape, tape.constant(random_tensor(30, 6, rng, -4, 4)), proj);
  ASSERT_EQ(w.rows(), 30u);
  ASSERT_EQ(w.cols(), 5u);
  for (std::size_t i = 0; i < 30; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_GE(w.value().at(i, j), 0.0);
      s += w.value().at(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(EncodeTokens, MatchesWeightedMeanLoop) {
  Rng rng(4);
  const Tensor x = random_tensor(9, 3, rng);
  Tensor w = random_tensor(9, 4, rng, 0.0, 1.0);
  Tape tape;
  Var z = encode_tokens(tape.constant(x), tape.constant(w));
  for (std::size_t j = 0; j < 4; ++j) {
    double mass = 0.0;
    for (std::size_t i = 0; i < 9; ++i) mass += w.at(i, j);
    for (std::size_t c = 0; c < 3; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < 9; ++i) acc += w.at(i, j) * x.at(i, c);
      EXPECT_NEAR(z.value().at(j, c), acc / mass, 1e-12);
    }
  }
}

TEST(EncodeTokens, EmptySliceGivesZeroToken) {
  const Tensor x = Tensor::from_rows({{1, 2}, {3, 4}});
  const Tensor w = Tensor::from_rows({{1, 0}, {1, 0}});
  Tape tape;
  Var z = encode_tokens(tape.constant(x), tape.constant(w));
  EXPECT_EQ(z.value(), Tensor::from_rows({{2, 3}, {0, 0}}));
  EXPECT_TRUE(z.value().all_finite());
}

TEST(EncodeTokens, ConstantFieldGivesConstantTokens) {
  Rng rng(5);
  Tensor x = Tensor::zeros(7, 2);
  for (std::size_t i = 0; i < 7; ++i) {
    x.at(i, 0) = 2.5;
    x.at(i, 1) = -1.0;
  }
  Tape tape;
  Var z = encode_tokens(tape.constant(x), tape.constant(random_tensor(7, 3, rng, 0.1, 1.0)));
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(z.value().at(j, 0), 2.5, 1e-12);
    EXPECT_NEAR(z.value().at(j, 1), -1.0, 1e-12);
  }
}

TEST(TokenAttention, MapsAreRowStochastic) {
  TransolverModel model(small_config(), 7);
  Rng rng(8);
  Tape tape;
  std::vector<Var> maps;
  const double scale = 1.0 / std::sqrt(4.0);
  Var out = token_attention(tape, tape.constant(random_tensor(4, 8, rng)), model.block(0).attention, scale, &maps);
  EXPECT_EQ(out.rows(), 4u);
  EXPECT_EQ(out.cols(), 8u);
  ASSERT_EQ(maps.size(), 2u);
  for (const Var& a : maps) {
    ASSERT_EQ(a.rows(), 4u);
    ASSERT_EQ(a.cols(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += a.value().at(i, j);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(TokenAttention, SingleTokenPassesValueThrough) {
  Rng rng(9);
  ParameterSet ps;
  TokenAttention att;
  att.query.push_back(nn::Linear::create(ps, "q", 3, 3, rng));
  att.key.push_back(nn::Linear::create(ps, "k", 3, 3, rng));
  att.value.push_back(nn::Linear::create(ps, "v", 3, 3, rng));
  att.output = nn::Linear::create(ps, "o", 3, 3, rng);
  Tape tape;
  Var z = tape.constant(random_tensor(1, 3, rng));
  Var got = token_attention(tape, z, att, 0.5, nullptr);
  Var expect = att.output(tape, att.value[0](tape, z));
  EXPECT_EQ(got.value(), expect.value());
}

TEST(Deslice, IdenticalTokensBroadcast) {
  Rng rng(10);
  Tensor tokens = Tensor::zeros(3, 2);
  for (std::size_t j = 0; j < 3; ++j) {
    tokens.at(j, 0) = 1.5;
    tokens.at(j, 1) = -2.0;
  }
  Tensor w = random_tensor(6, 3, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < 6; ++i) {
    const double s = w.at(i, 0) + w.at(i, 1) + w.at(i, 2);
    for (std::size_t j = 0; j < 3; ++j) w.at(i, j) /= s;
  }
  Tape tape;
  Var x = deslice(tape.constant(w), tape.constant(tokens));
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_NEAR(x.value().at(i, 0), 1.5, 1e-12);
    EXPECT_NEAR(x.value().at(i, 1), -2.0, 1e-12);
  }
}

TEST(TransolverModel, ZeroedBranchesMakeBlocksIdentity) {
  TransolverModel model(small_config(), 11);
  for (std::size_t l = 0; l < model.num_blocks(); ++l) {
    model.block(l).attention.output.zero();
    model.block(l).mlp.zero();
  }
  Rng rng(12);
  Tape tape;
  const Tensor x0 = random_tensor(10, 8, rng);
  Var x = tape.constant(x0);
  for (std::size_t l = 0; l < model.num_blocks(); ++l) {
    const Tensor y = model.block_forward(tape, x, l).value();
    EXPECT_EQ(y, x0);
  }
}

TEST(TransolverModel, OutputShapeAndInputCheck) {
  TransolverModel model(small_config(), 13);
  Rng rng(14);
  Tape tape;
  EXPECT_EQ(model.forward(tape, tape.constant(random_tensor(17, 5, rng))).shape(), (Shape{17, 3}));
  EXPECT_THROW(model.forward(tape, tape.constant(random_tensor(17, 4, rng))), ShapeError);
}

TEST(TransolverModel, SameSeedSameParameters) {
  TransolverModel a(small_config(), 21);
  TransolverModel b(small_config(), 21);
  TransolverModel c(small_config(), 22);
  ASSERT_EQ(a.params().size(), b.params().size());
  bool differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    EXPECT_EQ(a.params()[i].value, b.params()[i].value);
    differs |= !(a.params()[i].value == c.params()[i].value);
  }
  EXPECT_TRUE(differs);
}

TEST(TransolverModel, NodePermutationEquivariance) {
  TransolverModel model(small_config(), 15);
  Rng rng(16);
  const std::size_t n = 25;
  const Tensor x = random_tensor(n, 5, rng);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Tensor xp = Tensor::zeros(n, 5);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 5; ++c) xp.at(i, c) = x.at(perm[i], c);
  }
  Tape tape;
  const Tensor y = model.forward(tape, tape.constant(x)).value();
  const Tensor yp = model.forward(tape, tape.constant(xp)).value();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(yp.at(i, c), y.at(perm[i], c), 1e-10);
  }
}

TEST(TransolverModel, GradientMatchesFiniteDifferences) {
  TransolverConfig cfg = small_config();
  cfg.hidden_dim = 4;
  TransolverModel model(cfg, 17);
  Rng rng(18);
  const Tensor x = random_tensor(12, 5, rng);
  const Tensor target = random_tensor(12, 3, rng);
  std::vector<Parameter*> list;
  for (auto& p : model.params()) list.push_back(&p);
  auto res = grad_check(
      [&](Tape& t) { return mean_square(sub(model.forward(t, t.constant(x)), t.constant(target))); }, list, 1e-5,
      1e-6);
  EXPECT_LT(res.max_rel_error, 1e-4);
  EXPECT_EQ(res.checked, model.params().total_values());
}

TEST(TransolverModel, CostScalesWithNodesNotPairs) {
  // The only N-sized intermediates are N x M and N x C; doubling N doubles
  // the recorded forward storage up to parameter-sized terms.
  TransolverModel model(small_config(), 19);
  Rng rng(20);
  Tape t1, t2;
  model.forward(t1, t1.constant(random_tensor(200, 5, rng)));
  model.forward(t2, t2.constant(random_tensor(400, 5, rng)));
  const double r = double(t2.stored_values()) / double(t1.stored_values());
  EXPECT_GT(r, 1.9);
  EXPECT_LT(r, 2.05);
}

}  // namespace
