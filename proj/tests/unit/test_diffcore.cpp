// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "../support/printers.hpp"
#include "crash/diff/grad_check.hpp"
#include "crash/diff/ops.hpp"
#include "crash/errors.hpp"
#include "crash/random.hpp"

namespace {

using namespace crash;
using namespace crash::diff;

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

void expect_tensor_near(const Tensor& a, const Tensor& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Linear, IdentityWeights) {
  Tape tape;
  Var y = linear(tape.constant(Tensor::from_rows({{1, 2}})), tape.constant(Tensor::from_rows({{1, 0}, {0, 1}})),
                 tape.constant(Tensor::from_rows({{0, 0}})));
  EXPECT_EQ(y.value(), Tensor::from_rows({{1, 2}}));
}

TEST(Linear, DirectSubstitution) {
  Tape tape;
  Var y = linear(tape.constant(Tensor::from_rows({{1, 0}, {0, 1}})),
                 tape.constant(Tensor::from_rows({{2, 0}, {0, 3}})), tape.constant(Tensor({2}, std::vector<double>{1.0, 1.0})));
  EXPECT_EQ(y.value(), Tensor::from_rows({{3, 1}, {1, 4}}));
}

TEST(Linear, ShapeMismatchThrows) {
  Tape tape;
  EXPECT_THROW(linear(tape.constant(Tensor::zeros(2, 3)), tape.constant(Tensor::zeros(2, 2)),
                      tape.constant(Tensor::zeros(1, 2))),
               ShapeError);
}

TEST(Linear, WeightGradientMatchesFiniteDifferences) {
  Rng rng(1);
  ParameterSet ps;
  Parameter& w = ps.add("w", random_tensor(3, 4, rng));
  Parameter& b = ps.add("b", random_tensor(1, 4, rng));
  const Tensor x = random_tensor(5, 3, rng);
  Parameter* list[] = {&w, &b};
  auto res = grad_check([&](Tape& t) { return sum(linear(t.constant(x), t.param(w), t.param(b))); }, list);
  EXPECT_LT(res.max_rel_error, 1e-7);
  EXPECT_EQ(res.checked, 16u);
}

TEST(Softmax, SymmetricInput) {
  Tape tape;
  Var y = softmax(tape.constant(Tensor::from_rows({{0, 0}})), 1);
  expect_tensor_near(y.value(), Tensor::from_rows({{0.5, 0.5}}), 1e-15);
}

TEST(Softmax, LargeLogitsDoNotOverflow) {
  Tape tape;
  Var y = softmax(tape.constant(Tensor::from_rows({{1000, 0}})), 1);
  EXPECT_NEAR(y.value()[0], 1.0, 1e-15);
  EXPECT_NEAR(y.value()[1], 0.0, 1e-15);
}

TEST(Softmax, RowsSumToOneOnBothAxes) {
  Rng rng(3);
  for (int axis : {0, 1}) {
    Tape tape;
    Var y = softmax(tape.constant(random_tensor(7, 5, rng, -20, 20)), axis);
    const Tensor& v = y.value();
    const std::size_t outer = axis == 1 ? v.rows() : v.cols();
    const std::size_t inner = axis == 1 ? v.cols() : v.rows();
    for (std::size_t o = 0; o < outer; ++o) {
      double s = 0.0;
      for (std::size_t i = 0; i < inner; ++i) {
        const double e = axis == 1 ? v.at(o, i) : v.at(i, o);
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 1.0);
        s += e;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(LayerNorm, ConstantRowMapsToBias) {
  Tape tape;
  Var y = layer_norm(tape.constant(Tensor::from_rows({{5, 5, 5}})), tape.constant(Tensor({3}, 1.0)),
                     tape.constant(Tensor({3}, 0.0)));
  expect_tensor_near(y.value(), Tensor::from_rows({{0, 0, 0}}), 0.0);
}

TEST(LayerNorm, SymmetricRow) {
  Tape tape;
  Var y = layer_norm(tape.constant(Tensor::from_rows({{1, -1}})), tape.constant(Tensor({2}, 1.0)),
                     tape.constant(Tensor({2}, 0.0)));
  // Unit variance; eps = 1e-5 shrinks the result slightly.
  const double expect = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y.value()[0], expect, 1e-15);
  EXPECT_NEAR(y.value()[1], -expect, 1e-15);
}

TEST(Activation, ReluAndGeluValues) {
  Tape tape;
  EXPECT_EQ(activation(tape.constant(Tensor::from_rows({{-1, 2}})), Activation::relu).value(),
            Tensor::from_rows({{0, 2}}));
  EXPECT_EQ(activation(tape.constant(Tensor::from_rows({{0}})), Activation::gelu).value().item(), 0.0);
  // Exact form x * Phi(x).
  const double x = 1.3;
  const double expect = x * 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  EXPECT_DOUBLE_EQ(activation(tape.constant(Tensor::from_rows({{x}})), Activation::gelu).value().item(), expect);
}

TEST(ScatterSum, DirectSubstitution) {
  Tape tape;
  const std::size_t idx[] = {0, 0, 1};
  Var y = scatter_sum(tape.constant(Tensor::from_rows({{1}, {2}, {3}})), idx, 2);
  EXPECT_EQ(y.value(), Tensor::from_rows({{3}, {3}}));
}

TEST(ScatterSum, EmptyBucketIsZero) {
  Tape tape;
  const std::size_t idx[] = {0};
  Var y = scatter_sum(tape.constant(Tensor::from_rows({{1}})), idx, 2);
  EXPECT_EQ(y.value(), Tensor::from_rows({{1}, {0}}));
}

TEST(ScatterSum, IndexOutOfRangeThrows) {
  Tape tape;
  const std::size_t idx[] = {2};
  EXPECT_THROW(scatter_sum(tape.constant(Tensor::from_rows({{1}})), idx, 2), IndexError);
}

TEST(ScatterSum, GradientRoutesToContributors) {
  Rng rng(5);
  ParameterSet ps;
  Parameter& v = ps.add("v", random_tensor(6, 2, rng));
  const std::vector<std::size_t> idx{0, 2, 2, 1, 0, 2};
  const Tensor weights = random_tensor(3, 2, rng);
  Parameter* list[] = {&v};
  auto res = grad_check([&](Tape& t) { return sum(mul(scatter_sum(t.param(v), idx, 3), t.constant(weights))); },
                        list);
  EXPECT_LT(res.max_rel_error, 1e-7);
}

TEST(ScatterSum, GatherOnDistinctIndicesIsIdentity) {
  Rng rng(8);
  Tape tape;
  const Tensor x = random_tensor(4, 3, rng);
  const std::vector<std::size_t> idx{3, 0, 2, 1};
  Var y = gather(scatter_sum(tape.constant(x), idx, 4), idx);
  EXPECT_EQ(y.value(), x);
}

TEST(ScatterSum, EdgeOrderBarelyMatters) {
  Rng rng(9);
  const std::size_t m = 500;
  Tensor vals = random_tensor(m, 4, rng, -1e3, 1e3);
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = rng.below(7);
  std::vector<std::size_t> perm(m);
  for (std::size_t i = 0; i < m; ++i) perm[i] = i;
  for (std::size_t i = m; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  Tensor vals_p = vals;
  std::vector<std::size_t> idx_p(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < 4; ++c) vals_p.at(i, c) = vals.at(perm[i], c);
    idx_p[i] = idx[perm[i]];
  }
  Tape tape;
  const Tensor a = scatter_sum(tape.constant(vals), idx, 7).value();
  const Tensor b = scatter_sum(tape.constant(vals_p), idx_p, 7).value();
  EXPECT_LT(max_abs_diff(a, b), 1e-9);
}

TEST(Plumbing, MatmulGatherConcat) {
  Tape tape;
  const Tensor a = Tensor::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(tape.constant(Tensor::from_rows({{1, 0}, {0, 1}})), tape.constant(a)).value(), a);
  const std::size_t idx[] = {2, 0};
  EXPECT_EQ(gather(tape.constant(Tensor::from_rows({{1}, {2}, {3}})), idx).value(), Tensor::from_rows({{3}, {1}}));
  EXPECT_EQ(concat({tape.constant(Tensor::from_rows({{1}})), tape.constant(Tensor::from_rows({{2}}))}).value(),
            Tensor::from_rows({{1, 2}}));
}

TEST(Plumbing, MatmulTransposeFlags) {
  Rng rng(4);
  const Tensor a = random_tensor(3, 4, rng);
  const Tensor b = random_tensor(3, 5, rng);
  Tape tape;
  const Tensor c = matmul(tape.constant(a), tape.constant(b), true, false).value();
  ASSERT_EQ(c.rows(), 4u);
  ASSERT_EQ(c.cols(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += a.at(k, i) * b.at(k, j);
      EXPECT_NEAR(c.at(i, j), s, 1e-14);
    }
  }
}

TEST(Backward, LinearLossGradientIsInputColumnSums) {
  Rng rng(11);
  ParameterSet ps;
  Parameter& w = ps.add("w", random_tensor(3, 2, rng));
  const Tensor x = random_tensor(4, 3, rng);
  Tape tape;
  tape.backward(sum(matmul(tape.constant(x), tape.param(w))));
  for (std::size_t i = 0; i < 3; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r) s += x.at(r, i);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(w.grad.at(i, j), s, 1e-14);
  }
}

TEST(Backward, UnusedParameterGetsExactZero) {
  ParameterSet ps;
  Parameter& used = ps.add("used", Tensor::from_rows({{2.0}}));
  Parameter& unused = ps.add("unused", Tensor::from_rows({{3.0}}));
  Tape tape;
  tape.param(unused);
  tape.backward(sum(mul(tape.param(used), tape.param(used))));
  EXPECT_EQ(used.grad.item(), 4.0);
  EXPECT_EQ(unused.grad.item(), 0.0);
}

TEST(Backward, GradientsAccumulate) {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::from_rows({{3.0}}));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(sum(mul(tape.param(p), tape.param(p))));
  }
  EXPECT_EQ(p.grad.item(), 12.0);
  ps.zero_grad();
  EXPECT_EQ(p.grad.item(), 0.0);
}

TEST(Backward, NonScalarLossThrows) {
  Tape tape;
  Var v = tape.leaf(Tensor::zeros(2, 2).set_requires_grad(true));
  EXPECT_THROW(tape.backward(v), ShapeError);
}

TEST(Backward, NonFiniteResultThrows) {
  Tape tape;
  Var a = tape.constant(Tensor::from_rows({{1e308}}));
  EXPECT_THROW(scale(a, 10.0), NumericalError);
}

// A small recurrent computation: a few residual tanh-free steps with a
// nonlinearity, run through segments in both modes.
GradSink segmented_grads(ParameterSet& ps, Parameter& w, Parameter& b, const Tensor& x0, bool checkpoint,
                         std::size_t* stored = nullptr) {
  Tape tape;
  GradSink sink = ps.make_sink();
  Var x = tape.constant(x0);
  Var loss;
  const SegmentFn fn = [&](Tape& sub, std::span<const Var> in) {
    Var h = activation(linear(in[0], sub.param(w), sub.param(b)), Activation::gelu);
    return std::vector<Var>{add(in[0], h)};
  };
  for (int k = 0; k < 5; ++k) {
    const Var inputs[] = {x};
    x = tape.segment(inputs, fn, checkpoint).front();
    Var term = mean_square(x);
    loss = k == 0 ? term : add(loss, term);
  }
  if (stored) *stored = tape.stored_values();
  tape.backward(loss, &sink);
  return sink;
}

TEST(Checkpoint, GradientsBitIdentical) {
  Rng rng(21);
  ParameterSet ps;
  Parameter& w = ps.add("w", random_tensor(6, 6, rng, -0.5, 0.5));
  Parameter& b = ps.add("b", random_tensor(1, 6, rng));
  const Tensor x0 = random_tensor(9, 6, rng);
  std::size_t stored_ckpt = 0, stored_plain = 0;
  const GradSink a = segmented_grads(ps, w, b, x0, true, &stored_ckpt);
  const GradSink c = segmented_grads(ps, w, b, x0, false, &stored_plain);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i] == c[i]) << "parameter " << i;
  EXPECT_LT(stored_ckpt, stored_plain);
}

TEST(Checkpoint, MatchesFiniteDifferences) {
  Rng rng(22);
  ParameterSet ps;
  Parameter& w = ps.add("w", random_tensor(4, 4, rng, -0.5, 0.5));
  Parameter& b = ps.add("b", random_tensor(1, 4, rng));
  const Tensor x0 = random_tensor(3, 4, rng);
  Parameter* list[] = {&w, &b};
  auto res = grad_check(
      [&](Tape& tape) {
        Var x = tape.constant(x0);
        const SegmentFn fn = [&](Tape& sub, std::span<const Var> in) {
          return std::vector<Var>{add(in[0], activation(linear(in[0], sub.param(w), sub.param(b)), Activation::gelu))};
        };
        Var loss;
        for (int k = 0; k < 3; ++k) {
          const Var inputs[] = {x};
          x = tape.segment(inputs, fn, true).front();
          loss = k == 0 ? mean_square(x) : add(loss, mean_square(x));
        }
        return loss;
      },
      list);
  EXPECT_LT(res.max_rel_error, 1e-6);
}

TEST(GradCheck, Quadratic) {
  ParameterSet ps;
  Parameter& p = ps.add("p", Tensor::from_rows({{3.0}}));
  Parameter* list[] = {&p};
  auto res = grad_check([&](Tape& t) { return sum(mul(t.param(p), t.param(p))); }, list);
  EXPECT_LT(res.max_abs_error, 1e-8);
  EXPECT_EQ(p.id, 0u);
}

// Random-input gradient checks for every differentiable op.
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const int which = GetParam();
  Rng rng(100 + which);
  ParameterSet ps;
  Parameter& a = ps.add("a", random_tensor(4, 3, rng));
  Parameter& b = ps.add("b", random_tensor(4, 3, rng));
  Parameter& w = ps.add("w", random_tensor(3, 3, rng));
  Parameter& s = ps.add("s", random_tensor(4, 1, rng, 0.5, 1.5));
  const Tensor probe = random_tensor(4, 3, rng);
  const std::vector<std::size_t> idx{1, 0, 3, 3, 2};
  Parameter* list[] = {&a, &b, &w, &s};
  auto f = [&](Tape& t) -> Var {
    Var A = t.param(a), B = t.param(b), W = t.param(w), S = t.param(s);
    Var y;
    switch (which) {
      case 0: y = matmul(A, W); break;
      case 1: y = matmul(A, B, true, false); break;
      case 2: y = matmul(A, B, false, true); break;
      case 3: y = mul(add(A, B), sub(A, B)); break;
      case 4: y = softmax(scale(A, 3.0), 1); break;
      case 5: y = softmax(A, 0); break;
      case 6: y = layer_norm(A, t.param(w), t.param(s)); break;
      case 7: y = activation(A, Activation::gelu); break;
      case 8: y = activation(scale(A, 2.0), Activation::relu); break;
      case 9: y = gather(A, idx); break;
      case 10: y = scatter_sum(gather(A, idx), idx, 4); break;
      case 11: y = concat({A, S, B}); break;
      case 12: y = slice_cols(A, 1, 3); break;
      case 13: y = row_norm(A); break;
      case 14: y = transpose(col_sum(A)); break;
      case 15: y = row_scale(A, S); break;
      case 16: y = reciprocal_guarded(S, 1e-12); break;
      case 17: y = mean_square(A); break;
      case 18: y = verlet(A, B, matmul(A, W), 0.1); break;
      case 19: y = affine_cols(A, std::vector<double>{1.5, -2.0, 0.5}, std::vector<double>{1.0, 0.0, -3.0}); break;
      default: y = linear(A, W, t.param(s)); break;
    }
    if (y.cols() == probe.cols() && y.rows() == probe.rows()) return sum(mul(y, t.constant(probe)));
    return sum(mul(y, y));
  };
  if (which == 6) {
    // layer_norm takes 1 x c gain/bias; use dedicated parameters.
    ParameterSet ps2;
    Parameter& x = ps2.add("x", random_tensor(4, 3, rng));
    Parameter& g = ps2.add("g", random_tensor(1, 3, rng, 0.5, 1.5));
    Parameter& beta = ps2.add("beta", random_tensor(1, 3, rng));
    Parameter* l2[] = {&x, &g, &beta};
    auto res = grad_check(
        [&](Tape& t) { return sum(mul(layer_norm(t.param(x), t.param(g), t.param(beta)), t.constant(probe))); }, l2);
    EXPECT_LT(res.max_rel_error, 1e-6);
    return;
  }
  if (which == 20) {
    ParameterSet ps2;
    Parameter& x = ps2.add("x", random_tensor(4, 3, rng));
    Parameter& W2 = ps2.add("W", random_tensor(3, 3, rng));
    Parameter& b2 = ps2.add("b", random_tensor(1, 3, rng));
    Parameter* l2[] = {&x, &W2, &b2};
    auto res = grad_check(
        [&](Tape& t) { return sum(mul(linear(t.param(x), t.param(W2), t.param(b2)), t.constant(probe))); }, l2);
    EXPECT_LT(res.max_rel_error, 1e-6);
    return;
  }
  auto res = grad_check(f, list);
  EXPECT_LT(res.max_rel_error, 1e-6) << "op " << which;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradient, ::testing::Range(0, 21));

}  // namespace
