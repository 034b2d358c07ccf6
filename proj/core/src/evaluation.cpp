// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "crash/errors.hpp"

namespace crash::evaluation {

std::vector<double> relative_l2(std::span<const Tensor> pred, std::span<const Tensor> gt, const Tensor& x0) {
  if (pred.size() != gt.size()) throw ShapeError("relative_l2: frame counts differ");
  std::vector<double> out;
  out.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].shape() != gt[t].shape() || gt[t].shape() != x0.shape()) {
      throw ShapeError("relative_l2: frame " + std::to_string(t) + " shapes differ");
    }
    if (t == 0) {
      out.push_back(0.0);
      continue;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double e = pred[t][i] - gt[t][i];
      const double d = gt[t][i] - x0[i];
      num += e * e;
      den += d * d;
    }
    out.push_back(std::sqrt(num) / std::max(std::sqrt(den), kRelativeL2Floor));
  }
  return out;
}

ErrorCurve aggregate_curves(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw DataError("aggregate_curves: no curves");
  const std::size_t len = curves.front().size();
  for (const auto& c : curves) {
    if (c.size() != len) throw ShapeError("aggregate_curves: curve lengths differ");
  }
  ErrorCurve out;
  out.mean.assign(len, 0.0);
  out.std.assign(len, 0.0);
  const double n = double(curves.size());
  for (std::size_t t = 0; t < len; ++t) {
    // Sort the column so the result does not depend on sample order.
    std::vector<double> col;
    for (const auto& c : curves) col.push_back(c[t]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (double v : col) s += v;
    const double mu = s / n;
    double ss = 0.0;
    for (double v : col) ss += (v - mu) * (v - mu);
    out.mean[t] = mu;
    out.std[t] = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return out;
}

ProbeSeries probe_series(std::span<const Tensor> traj, std::size_t node, double dt) {
  const std::size_t T = traj.size();
  if (T < 3) throw ShapeError("probe_series: need at least 3 frames");
  if (!(dt > 0.0)) throw ConfigError("probe_series: dt must be positive");
  if (node >= traj[0].rows()) throw IndexError("probe id " + std::to_string(node) + " out of range");
  std::vector<double> x(T);
  for (std::size_t t = 0; t < T; ++t) x[t] = traj[t].at(node, 0);
  ProbeSeries s;
  for (std::size_t t = 0; t < T; ++t) s.displacement.push_back(x[t] - x[0]);
  s.velocity.resize(T);
  s.velocity[0] = (x[1] - x[0]) / dt;
  s.velocity[T - 1] = (x[T - 1] - x[T - 2]) / dt;
  for (std::size_t t = 1; t + 1 < T; ++t) s.velocity[t] = (x[t + 1] - x[t - 1]) / (2.0 * dt);
  s.acceleration.resize(T);
  for (std::size_t t = 1; t + 1 < T; ++t) s.acceleration[t] = (x[t + 1] - 2.0 * x[t] + x[t - 1]) / (dt * dt);
  s.acceleration[0] = s.acceleration[1];
  s.acceleration[T - 1] = s.acceleration[T - 2];
  return s;
}

std::vector<ProbeHistory> probe_histories(std::span<const Tensor> pred, std::span<const Tensor> gt,
                                          std::span<const std::size_t> probes, double dt) {
  if (pred.size() != gt.size()) throw ShapeError("probe_histories: frame counts differ");
  std::vector<ProbeHistory> out;
  for (std::size_t p : probes) out.push_back({p, probe_series(pred, p, dt), probe_series(gt, p, dt)});
  return out;
}

std::vector<std::size_t> default_probes(const geometry::Mesh& mesh) {
  if (mesh.num_nodes() == 0) throw DataError("default_probes: empty mesh");
  double x_min = mesh.positions[0][0], y_min = mesh.positions[0][1], y_max = y_min;
  for (const auto& p : mesh.positions) {
    x_min = std::min(x_min, p[0]);
    y_min = std::min(y_min, p[1]);
    y_max = std::max(y_max, p[1]);
  }
  std::vector<std::size_t> rear;
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    if (std::abs(mesh.positions[i][0] - x_min) < 1e-9) rear.push_back(i);
  }
  std::sort(rear.begin(), rear.end(), [&](std::size_t a, std::size_t b) {
    return std::pair(mesh.positions[a][1], a) < std::pair(mesh.positions[b][1], b);
  });
  const std::size_t q = rear.size() / 4;
  if (rear.size() < 2) return rear;
  return {rear[q], rear[rear.size() - 1 - q]};
}

std::vector<SchemeSummary> compare_schemes(std::span<const SchemeCurve> curves) {
  std::vector<SchemeSummary> rows;
  if (curves.empty()) return rows;
  const auto& ref = curves.front();
  for (const auto& c : curves) {
    if (c.test_samples != ref.test_samples) throw DataError("compare_schemes: " + c.name + " used a different test set");
    if (c.curve.size() != ref.curve.size()) throw DataError("compare_schemes: " + c.name + " has a different horizon");
  }
  for (const auto& c : curves) {
    const auto& m = c.curve.mean;
    SchemeSummary s;
    s.name = c.name;
    s.final_mean = m.empty() ? 0.0 : m.back();
    const std::size_t first = 1;
    const std::size_t count = m.size() > first ? m.size() - first : 0;
    if (count > 0) {
      double sum = 0.0, st = 0.0;
      for (std::size_t t = first; t < m.size(); ++t) {
        sum += m[t];
        st += double(t);
      }
      s.time_mean = sum / double(count);
      const double t_bar = st / double(count);
      double num = 0.0, den = 0.0;
      for (std::size_t t = first; t < m.size(); ++t) {
        num += (double(t) - t_bar) * (m[t] - s.time_mean);
        den += (double(t) - t_bar) * (double(t) - t_bar);
      }
      s.slope = den > 0.0 ? num / den : 0.0;
    }
    rows.push_back(s);
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, std::span<const SchemeSummary> rows) {
  out << "# relative L2 error: ||pred_t - gt_t||_F / max(||gt_t - X0||_F, 1e-8), mean over test samples\n";
  out << "# slope: least-squares slope of the mean error over frames 1..T-1, per frame\n";
  out << "model,final_mean,time_mean,slope\n";
  out << std::setprecision(10);
  for (const auto& r : rows) out << r.name << ',' << r.final_mean << ',' << r.time_mean << ',' << r.slope << '\n';
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << std::setprecision(10);
  return f;
}

}  // namespace

void write_error_curve_csv(const std::filesystem::path& path, const ErrorCurve& curve, double dt) {
  auto f = open_csv(path);
  f << "t,mean,std\n";
  for (std::size_t t = 0; t < curve.size(); ++t) f << double(t) * dt << ',' << curve.mean[t] << ',' << curve.std[t] << '\n';
}

void write_probe_csv(const std::filesystem::path& path, const ProbeHistory& p, double dt) {
  auto f = open_csv(path);
  f << "t,disp_pred,disp_gt,vel_pred,vel_gt,acc_pred,acc_gt\n";
  for (std::size_t t = 0; t < p.gt.displacement.size(); ++t) {
    f << double(t) * dt << ',' << p.pred.displacement[t] << ',' << p.gt.displacement[t] << ',' << p.pred.velocity[t]
      << ',' << p.gt.velocity[t] << ',' << p.pred.acceleration[t] << ',' << p.gt.acceleration[t] << '\n';
  }
}

void write_positions_csv(const std::filesystem::path& path, const Tensor& positions) {
  auto f = open_csv(path);
  f << "node,x,y,z\n";
  for (std::size_t i = 0; i < positions.rows(); ++i) {
    f << i << ',' << positions.at(i, 0) << ',' << positions.at(i, 1) << ',' << positions.at(i, 2) << '\n';
  }
}

}  // namespace crash::evaluation
