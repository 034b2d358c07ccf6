// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/transient.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crash/errors.hpp"

namespace crash::transient {

Tensor verlet_step(const Tensor& x_cur, const Tensor& x_prev, const Tensor& accel, double dt) {
  if (x_cur.shape() != x_prev.shape() || x_cur.shape() != accel.shape()) {
    throw ShapeError("verlet_step: shapes differ " + diff::shape_string(x_cur.shape()) + " / " +
                     diff::shape_string(x_prev.shape()) + " / " + diff::shape_string(accel.shape()));
  }
  if (!(dt > 0.0)) throw ConfigError("verlet_step: dt must be positive");
  if (!accel.all_finite()) throw NumericalError("verlet_step: non-finite acceleration");
  Tensor out(x_cur.shape());
  const double dt2 = dt * dt;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dt2 * accel[i] + 2.0 * x_cur[i] - x_prev[i];
  return out;
}

namespace {

Tensor seed_previous(const Tensor& x0, const geometry::Vec3& v0, double dt) {
  Tensor prev = x0;
  for (std::size_t i = 0; i < prev.rows(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) prev.at(i, d) -= dt * v0[d];
  }
  return prev;
}

}  // namespace

std::vector<Tensor> rollout(const Surrogate& model, const Tensor& x0, const geometry::Vec3& v0,
                            std::span<const double> tau, std::size_t steps) {
  if (!is_autoregressive(model.spec().scheme)) throw ConfigError("rollout: requires an AR-scheme model");
  const double dt = model.context().dt;
  const Tensor tau_m = model.restrict_thickness(tau);
  RolloutState state{model.restrict(x0), model.restrict(seed_previous(x0, v0, dt)), 0};
  std::vector<Tensor> out;
  out.reserve(steps + 1);
  out.push_back(x0);
  for (; state.step < steps; ++state.step) {
    Tensor next;
    try {
      diff::Tape tape;
      Var xn = model.step(tape, tape.constant(state.x_cur), tape.constant(state.x_prev), tau_m);
      next = xn.value();
    } catch (const NumericalError& e) {
      throw NumericalError("rollout: non-finite state at step " + std::to_string(state.step + 1) + ": " + e.what());
    }
    state.x_prev = std::move(state.x_cur);
    state.x_cur = std::move(next);
    out.push_back(model.lift(state.x_cur));
  }
  return out;
}

std::vector<Tensor> predict(const Surrogate& model, std::span<const double> tau, const Tensor& x0,
                            const geometry::Vec3& v0, std::span<const double> times) {
  const PhysicalContext& ctx = model.context();
  std::vector<Tensor> out;
  out.reserve(times.size());
  if (model.spec().scheme == Scheme::tc) {
    const Tensor tau_m = model.restrict_thickness(tau);
    const Tensor x0_m = model.restrict(x0);
    for (double t : times) {
      if (!(t >= 0.0 && t <= ctx.t_max * (1.0 + 1e-12))) {
        throw ConfigError("predict: time " + std::to_string(t) + " s outside [0, t_max]");
      }
      diff::Tape tape;
      out.push_back(model.lift(model.positions_at(tape, x0_m, tau_m, std::min(t, ctx.t_max)).value()));
    }
    return out;
  }
  std::vector<std::size_t> steps;
  std::size_t max_step = 0;
  for (double t : times) {
    const double k = t / ctx.dt;
    const double kr = std::round(k);
    if (t < 0.0 || std::abs(k - kr) > 1e-6) {
      throw ConfigError("predict: time " + std::to_string(t) + " s is not on the frame grid");
    }
    steps.push_back(std::size_t(kr));
    max_step = std::max(max_step, std::size_t(kr));
  }
  const std::vector<Tensor> traj = rollout(model, x0, v0, tau, max_step);
  for (std::size_t k : steps) out.push_back(traj[k]);
  return out;
}

}  // namespace crash::transient
