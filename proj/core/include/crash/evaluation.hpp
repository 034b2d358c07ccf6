// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crash/diff/tensor.hpp"
#include "crash/geometry.hpp"

namespace crash::evaluation {

using diff::Tensor;

inline constexpr double kRelativeL2Floor = 1e-8;

// eps(t) = ||pred_t - gt_t||_F / max(||gt_t - x0||_F, 1e-8), with eps(0) = 0.
std::vector<double> relative_l2(std::span<const Tensor> pred, std::span<const Tensor> gt, const Tensor& x0);

struct ErrorCurve {
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation; 0 for a single curve

  std::size_t size() const noexcept { return mean.size(); }
};

ErrorCurve aggregate_curves(std::span<const std::vector<double>> curves);

// Histories along the impact axis (x).
struct ProbeSeries {
  std::vector<double> displacement;
  std::vector<double> velocity;
  std::vector<double> acceleration;
};

// Displacement x_t - x_0; velocity by central differences (one-sided at the
// ends); acceleration by the second central difference, with each end
// taking its neighbour's value. Needs at least 3 frames.
ProbeSeries probe_series(std::span<const Tensor> traj, std::size_t node, double dt);

struct ProbeHistory {
  std::size_t node = 0;
  ProbeSeries pred;
  ProbeSeries gt;
};

std::vector<ProbeHistory> probe_histories(std::span<const Tensor> pred, std::span<const Tensor> gt,
                                          std::span<const std::size_t> probes, double dt);

// Two trailing-edge nodes (smallest x) mirrored about the sheet centreline.
std::vector<std::size_t> default_probes(const geometry::Mesh& mesh);

struct SchemeCurve {
  std::string name;
  ErrorCurve curve;
  std::vector<std::size_t> test_samples;
};

struct SchemeSummary {
  std::string name;
  double final_mean = 0.0;
  double time_mean = 0.0;  // mean over frames 1..T-1
  double slope = 0.0;      // least-squares slope of the mean over frames 1..T-1, per frame
};

// DataError when test sets or curve lengths differ.
std::vector<SchemeSummary> compare_schemes(std::span<const SchemeCurve> curves);

void write_comparison_csv(std::ostream& out, std::span<const SchemeSummary> rows);
void write_error_curve_csv(const std::filesystem::path& path, const ErrorCurve& curve, double dt);
void write_probe_csv(const std::filesystem::path& path, const ProbeHistory& probe, double dt);
void write_positions_csv(const std::filesystem::path& path, const Tensor& positions);

}  // namespace crash::evaluation
