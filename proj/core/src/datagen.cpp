// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <thread>

#include "crash/errors.hpp"
#include "crash/random.hpp"

namespace crash::datagen {

void CrashScenario::validate() const {
  if (nx < 2 || ny < 2) throw ConfigError("scenario: nx and ny must be >= 2");
  if (!(spacing > 0.0)) throw ConfigError("scenario: spacing must be positive");
  if (num_components < 1 || num_components > nx - 1) {
    throw ConfigError("scenario: num_components must be in [1, nx-1]");
  }
  if (!(node_mass > 0.0) || !(stiffness > 0.0) || !(wall_stiffness > 0.0)) {
    throw ConfigError("scenario: mass and stiffnesses must be positive");
  }
  if (!(yield_strain > 0.0)) throw ConfigError("scenario: yield_strain must be positive");
  if (!(post_yield_ratio >= 0.0 && post_yield_ratio < 1.0)) {
    throw ConfigError("scenario: post_yield_ratio must be in [0, 1)");
  }
  if (damping < 0.0) throw ConfigError("scenario: damping must be non-negative");
  if (!(nominal_thickness > 0.0)) throw ConfigError("scenario: nominal_thickness must be positive");
  if (!(dt_fine > 0.0) || substeps < 1) throw ConfigError("scenario: dt_fine and substeps must be positive");
  if (frames < 2) throw ConfigError("scenario: frames must be >= 2");
  // Thickness may reach 1.2x nominal.
  const double k_max = std::max(1.2 * stiffness, wall_stiffness);
  if (!(dt_fine < std::sqrt(node_mass / k_max))) {
    throw ConfigError("scenario: dt_fine " + std::to_string(dt_fine) + " violates the stability bound " +
                      std::to_string(std::sqrt(node_mass / k_max)));
  }
}

Mesh build_sheet_mesh(std::size_t nx, std::size_t ny, double spacing, std::size_t num_components) {
  if (nx < 2 || ny < 2) throw ConfigError("sheet: nx and ny must be >= 2");
  if (!(spacing > 0.0)) throw ConfigError("sheet: spacing must be positive");
  if (num_components < 1 || num_components > nx - 1) throw ConfigError("sheet: num_components must be in [1, nx-1]");
  Mesh mesh;
  const std::size_t cell_cols = nx - 1;
  mesh.positions.reserve(nx * ny);
  mesh.component_id.reserve(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      mesh.positions.push_back({double(i) * spacing, double(j) * spacing, 0.0});
      const std::size_t col = std::min(i, cell_cols - 1);
      mesh.component_id.push_back(int(col * num_components / cell_cols));
    }
  }
  for (std::size_t j = 0; j + 1 < ny; ++j) {
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      const std::size_t a = j * nx + i;
      mesh.cells.push_back({a, a + 1, a + nx + 1, a + nx});
    }
  }
  return mesh;
}

double wall_position(const Mesh& mesh, const CrashScenario& scenario) {
  double x_max = -std::numeric_limits<double>::infinity();
  for (const auto& p : mesh.positions) x_max = std::max(x_max, p[0]);
  return x_max + scenario.wall_gap;
}

std::vector<double> DesignSample::node_thickness(const Mesh& mesh) const {
  std::vector<double> out(mesh.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = std::size_t(mesh.component_id[i]);
    if (c >= component_thickness.size()) {
      throw DataError("design " + std::to_string(id) + " has no thickness for component " + std::to_string(c));
    }
    out[i] = component_thickness[c];
  }
  return out;
}

std::vector<DesignSample> sample_doe(std::size_t num_samples, std::size_t num_components, double nominal,
                                     std::uint64_t seed) {
  if (num_samples < 1) throw ConfigError("doe: num_samples must be >= 1");
  if (num_components < 1) throw ConfigError("doe: num_components must be >= 1");
  if (!(nominal > 0.0)) throw ConfigError("doe: nominal thickness must be positive");
  Rng rng(seed);
  std::set<std::vector<double>> seen;
  std::vector<DesignSample> out;
  out.reserve(num_samples);
  while (out.size() < num_samples) {
    DesignSample d;
    d.id = out.size();
    for (std::size_t c = 0; c < num_components; ++c) d.component_thickness.push_back(nominal * rng.uniform(0.8, 1.2));
    if (seen.insert(d.component_thickness).second) out.push_back(std::move(d));
  }
  return out;
}

namespace {

struct Spring {
  std::size_t a, b;
  double rest;
  double k;        // elastic stiffness
  double h;        // kinematic hardening modulus
  double f_yield;  // yield force
  double plastic = 0.0;
};

std::vector<Spring> build_springs(const Mesh& mesh, std::span<const double> tau, const CrashScenario& sc) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  auto add = [&](std::size_t a, std::size_t b) { pairs.insert({std::min(a, b), std::max(a, b)}); };
  for (const auto& cell : mesh.cells) {
    for (std::size_t s = 0; s < cell.size(); ++s) add(cell[s], cell[(s + 1) % cell.size()]);
    if (cell.size() == 4) {
      add(cell[0], cell[2]);
      add(cell[1], cell[3]);
    }
  }
  const double r = sc.post_yield_ratio;
  std::vector<Spring> springs;
  springs.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    Spring s{a, b, std::sqrt(geometry::squared_distance(mesh.positions[a], mesh.positions[b])), 0, 0, 0};
    s.k = sc.stiffness * 0.5 * (tau[a] + tau[b]) / sc.nominal_thickness;
    s.h = r * s.k / (1.0 - r);
    s.f_yield = s.k * sc.yield_strain * s.rest;
    springs.push_back(s);
  }
  return springs;
}

double domain_diameter(const Mesh& mesh) {
  Vec3 lo = mesh.positions.front(), hi = lo;
  for (const auto& p : mesh.positions) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  return std::sqrt(geometry::squared_distance(lo, hi));
}

}  // namespace

SimulationResult simulate_crash(const Mesh& mesh, const DesignSample& design, const CrashScenario& sc) {
  sc.validate();
  mesh.validate();
  const std::size_t n = mesh.num_nodes();
  if (n == 0) throw DataError("simulate_crash: empty mesh");
  const std::vector<double> tau = design.node_thickness(mesh);
  std::vector<Spring> springs = build_springs(mesh, tau, sc);
  const double wall_x = wall_position(mesh, sc);
  const double m = sc.node_mass;
  const double h = sc.dt_fine;
  const double limit = 10.0 * domain_diameter(mesh);

  std::vector<double> x(3 * n), v(3 * n, 0.0), f(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) x[3 * i + d] = mesh.positions[i][d];
    v[3 * i] = sc.v0;  // v holds v_{n-1/2}; the first half step uses v0
  }

  SimulationResult result;
  Trajectory& traj = result.trajectory;
  traj.thickness = tau;
  traj.v0 = {sc.v0, 0.0, 0.0};
  auto record = [&] {
    Tensor frame({n, 3});
    std::copy(x.begin(), x.end(), frame.data());
    traj.frames.push_back(std::move(frame));
  };
  record();

  EnergyAudit& audit = result.audit;
  audit.initial_kinetic = 0.5 * m * double(n) * sc.v0 * sc.v0;
  const double e_ref = audit.initial_kinetic > 0.0 ? audit.initial_kinetic : 1.0;
  const double e0 = audit.initial_kinetic;
  double plastic = 0.0, damped = 0.0;
  double kinetic_prev_half = 0.0;
  for (std::size_t i = 0; i < 3 * n; ++i) kinetic_prev_half += v[i] * v[i];

  const std::size_t total_steps = sc.substeps * (sc.frames - 1);
  for (std::size_t step = 0; step < total_steps; ++step) {
    std::fill(f.begin(), f.end(), 0.0);
    double elastic = 0.0, contact = 0.0, damping_power = 0.0;
    for (Spring& s : springs) {
      const double dx = x[3 * s.b] - x[3 * s.a];
      const double dy = x[3 * s.b + 1] - x[3 * s.a + 1];
      const double dz = x[3 * s.b + 2] - x[3 * s.a + 2];
      const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
      if (len <= 0.0) throw NumericalError("simulate_crash: coincident spring endpoints");
      const double ex = dx / len, ey = dy / len, ez = dz / len;
      const double delta = len - s.rest;
      double force = s.k * (delta - s.plastic);
      const double xi = force - s.h * s.plastic;
      if (std::abs(xi) > s.f_yield) {
        const double dgamma = (std::abs(xi) - s.f_yield) / (s.k + s.h);
        s.plastic += xi > 0.0 ? dgamma : -dgamma;
        plastic += s.f_yield * dgamma;
        force = s.k * (delta - s.plastic);
      }
      const double el = delta - s.plastic;
      elastic += 0.5 * s.k * el * el + 0.5 * s.h * s.plastic * s.plastic;
      const double vrel = (v[3 * s.b] - v[3 * s.a]) * ex + (v[3 * s.b + 1] - v[3 * s.a + 1]) * ey +
                          (v[3 * s.b + 2] - v[3 * s.a + 2]) * ez;
      const double fd = sc.damping * vrel;
      damping_power += fd * vrel;
      const double total = force + fd;
      f[3 * s.a] += total * ex;
      f[3 * s.a + 1] += total * ey;
      f[3 * s.a + 2] += total * ez;
      f[3 * s.b] -= total * ex;
      f[3 * s.b + 1] -= total * ey;
      f[3 * s.b + 2] -= total * ez;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double gap = x[3 * i] - wall_x;
      if (gap > 0.0) {
        f[3 * i] -= sc.wall_stiffness * gap;
        contact += 0.5 * sc.wall_stiffness * gap * gap;
      }
    }
    double kinetic_next_half = 0.0;
    for (std::size_t i = 0; i < 3 * n; ++i) {
      v[i] += h * f[i] / m;
      kinetic_next_half += v[i] * v[i];
    }
    // Energy at the current state: kinetic from the mean of the two half-step
    // speeds, stored energies at x_n, dissipation up to step n.
    if (step > 0) {
      const double kinetic = 0.25 * m * (kinetic_prev_half + kinetic_next_half);
      const double total = kinetic + elastic + contact + plastic + damped;
      audit.max_relative_error = std::max(audit.max_relative_error, std::abs(total - e0) / e_ref);
      audit.final_kinetic = kinetic;
      audit.final_elastic = elastic + contact;
    }
    damped += damping_power * h;
    kinetic_prev_half = kinetic_next_half;
    for (std::size_t i = 0; i < 3 * n; ++i) x[i] += h * v[i];
    if ((step + 1) % sc.substeps == 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[3 * i] - mesh.positions[i][0];
        const double dy = x[3 * i + 1] - mesh.positions[i][1];
        const double dz = x[3 * i + 2] - mesh.positions[i][2];
        const double disp = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (!std::isfinite(disp) || disp > limit) {
          throw NumericalError("simulate_crash: instability at fine step " + std::to_string(step + 1) + " (node " +
                               std::to_string(i) + ")");
        }
      }
      record();
    }
  }
  audit.plastic_dissipated = plastic;
  audit.damping_dissipated = damped;
  return result;
}

Tensor previous_state(const Trajectory& traj, std::size_t t, double dt) {
  if (t >= traj.frames.size()) throw IndexError("previous_state: frame out of range");
  if (t > 0) return traj.frames[t - 1];
  Tensor prev = traj.frames[0];
  for (std::size_t i = 0; i < prev.rows(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) prev.at(i, d) -= dt * traj.v0[d];
  }
  return prev;
}

Tensor frame_velocity(const Trajectory& traj, std::size_t t, double dt) {
  const Tensor prev = previous_state(traj, t, dt);
  Tensor out = traj.frames[t];
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - prev[i]) / dt;
  return out;
}

Tensor frame_acceleration(const Trajectory& traj, std::size_t t, double dt) {
  if (t + 1 >= traj.frames.size()) throw IndexError("frame_acceleration: needs frame t+1");
  const Tensor prev = previous_state(traj, t, dt);
  const Tensor& cur = traj.frames[t];
  const Tensor& next = traj.frames[t + 1];
  Tensor out(cur.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (next[i] - 2.0 * cur[i] + prev[i]) / (dt * dt);
  return out;
}

Tensor ChannelStats::normalize(const Tensor& v) const {
  if (v.cols() != channels()) throw ShapeError("normalize: channel count mismatch");
  Tensor out = v;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) out.at(r, c) = (v.at(r, c) - mean[c]) / std[c];
  }
  return out;
}

Tensor ChannelStats::denormalize(const Tensor& v) const {
  if (v.cols() != channels()) throw ShapeError("denormalize: channel count mismatch");
  Tensor out = v;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) out.at(r, c) = v.at(r, c) * std[c] + mean[c];
  }
  return out;
}

std::vector<double> ChannelStats::inv_std() const {
  std::vector<double> out(std.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / std[i];
  return out;
}

Splits make_splits(std::size_t num_samples, std::uint64_t seed) {
  std::vector<std::size_t> perm(num_samples);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (std::size_t i = num_samples; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto n_val = std::size_t(std::llround(0.05 * double(num_samples)));
  const auto n_test = std::size_t(std::llround(0.05 * double(num_samples)));
  Splits s;
  const std::size_t n_train = num_samples - n_val - n_test;
  s.train.assign(perm.begin(), perm.begin() + std::ptrdiff_t(n_train));
  s.val.assign(perm.begin() + std::ptrdiff_t(n_train), perm.begin() + std::ptrdiff_t(n_train + n_val));
  s.test.assign(perm.begin() + std::ptrdiff_t(n_train + n_val), perm.end());
  for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

namespace {

// Streaming per-channel moments; sums in long double to keep the stats
// independent of sample count at double precision.
struct Moments {
  std::vector<long double> sum, sum_sq;
  std::size_t count = 0;
  explicit Moments(std::size_t c) : sum(c, 0.0L), sum_sq(c, 0.0L) {}
  void add(const Tensor& t) {
    const std::size_t c = sum.size();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t j = 0; j < c; ++j) {
        const long double v = t.at(r, j);
        sum[j] += v;
        sum_sq[j] += v * v;
      }
    }
    count += t.rows();
  }
  ChannelStats finish() const {
    ChannelStats s;
    for (std::size_t j = 0; j < sum.size(); ++j) {
      const long double mu = sum[j] / (long double)count;
      const long double var = std::max(0.0L, sum_sq[j] / (long double)count - mu * mu);
      s.mean.push_back(double(mu));
      s.std.push_back(std::max(double(std::sqrt(var)), kStdFloor));
    }
    return s;
  }
};

}  // namespace

Normalization compute_normalization(const Dataset& ds, std::span<const std::size_t> samples) {
  if (samples.empty()) throw DataError("compute_normalization: empty split");
  const double dt = ds.dt();
  Moments pos(3), vel(3), acc(3), thick(1), wall(1);
  long double pooled_sum = 0.0L, pooled_sq = 0.0L;
  std::size_t pooled_n = 0;
  for (std::size_t s : samples) {
    if (s >= ds.samples.size()) throw IndexError("compute_normalization: sample index out of range");
    const Trajectory& traj = ds.samples[s];
    const std::size_t frames = traj.frames.size();
    Tensor tau({traj.thickness.size(), 1}, std::vector<double>(traj.thickness));
    thick.add(tau);
    for (std::size_t t = 0; t < frames; ++t) {
      const Tensor& x = traj.frames[t];
      pos.add(x);
      for (double v : x.values()) {
        pooled_sum += v;
        pooled_sq += (long double)v * v;
      }
      pooled_n += x.size();
      vel.add(frame_velocity(traj, t, dt));
      if (t + 1 < frames) acc.add(frame_acceleration(traj, t, dt));
      Tensor d({x.rows(), 1});
      for (std::size_t i = 0; i < x.rows(); ++i) d[i] = ds.wall_x - x.at(i, 0);
      wall.add(d);
    }
  }
  Normalization out;
  out.position = pos.finish();
  out.velocity = vel.finish();
  out.acceleration = acc.finish();
  out.thickness = thick.finish();
  out.wall_distance = wall.finish();
  const long double mu = pooled_sum / (long double)pooled_n;
  const long double var = std::max(0.0L, pooled_sq / (long double)pooled_n - mu * mu);
  out.position_scale = std::max(double(std::sqrt(var)), kStdFloor);
  return out;
}

void quantize_to_float32(Dataset& ds) {
  auto q = [](double v) { return double(float(v)); };
  for (auto& p : ds.mesh.positions) {
    for (double& c : p) c = q(c);
  }
  for (auto& traj : ds.samples) {
    for (double& t : traj.thickness) t = q(t);
    for (auto& frame : traj.frames) {
      for (double& v : frame.values()) v = q(v);
    }
    for (double& c : traj.v0) c = q(c);
  }
  for (auto& d : ds.designs) {
    for (double& t : d.component_thickness) t = q(t);
  }
}

Dataset generate_dataset(const CrashScenario& scenario, const GenerateOptions& options, const ProgressFn& progress) {
  scenario.validate();
  if (options.num_samples < 1) throw ConfigError("gen-data: num_samples must be >= 1");
  Dataset ds;
  ds.scenario = scenario;
  ds.seed = options.seed;
  ds.mesh = build_sheet_mesh(scenario.nx, scenario.ny, scenario.spacing, scenario.num_components);
  ds.wall_x = wall_position(ds.mesh, scenario);
  ds.designs = sample_doe(options.num_samples, scenario.num_components, scenario.nominal_thickness, options.seed);

  std::vector<SimulationResult> results(options.num_samples);
  const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, options.num_samples));
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t s = w; s < options.num_samples; s += workers) {
          results[s] = simulate_crash(ds.mesh, ds.designs[s], scenario);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (progress) progress(s, results[s].audit);
    ds.energy_error.push_back(results[s].audit.max_relative_error);
    ds.samples.push_back(std::move(results[s].trajectory));
  }
  quantize_to_float32(ds);
  ds.splits = make_splits(options.num_samples, options.seed);
  ds.stats = compute_normalization(ds, ds.splits.train);
  return ds;
}

}  // namespace crash::datagen
