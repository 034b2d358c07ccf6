// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "crash/diff/tensor.hpp"
#include "crash/geometry.hpp"

// Synthetic crash oracle: a bilinear-plastic mass-spring sheet driven into a
// rigid wall, plus the dataset container used for training. Units are mm, s
// and kg throughout.
namespace crash::datagen {

using diff::Tensor;
using geometry::Mesh;
using geometry::Vec3;

struct CrashScenario {
  std::size_t nx = 21;  // nodes along the impact axis (+x)
  std::size_t ny = 21;
  double spacing = 10.0;  // mm
  std::size_t num_components = 3;

  double node_mass = 0.01;          // kg
  double stiffness = 8.0e5;         // kg/s^2 per spring at nominal thickness
  double yield_strain = 0.02;
  double post_yield_ratio = 0.05;   // tangent / elastic stiffness after yield
  double damping = 40.0;            // kg/s, dashpot along each spring
  double wall_gap = 5.0;            // mm between the leading edge and the wall
  double wall_stiffness = 8.0e6;    // kg/s^2
  double v0 = 15556.0;              // mm/s toward the wall
  double nominal_thickness = 1.5;   // mm
  double dt_fine = 5.0e-6;          // s
  std::size_t substeps = 80;        // fine steps per frame
  std::size_t frames = 21;          // recorded frames including t = 0

  double frame_dt() const { return dt_fine * double(substeps); }
  double t_max() const { return frame_dt() * double(frames - 1); }
  void validate() const;
};

// Planar quad sheet in z = 0 spanning [0, (nx-1) spacing] x [0, (ny-1) spacing].
// Node (i, j) has index j * nx + i. Components are contiguous strips of cell
// columns along x; a node takes the component of the cell column to its
// right (the last column for the trailing edge).
Mesh build_sheet_mesh(std::size_t nx, std::size_t ny, double spacing, std::size_t num_components);

// x coordinate of the rigid wall for a sheet mesh.
double wall_position(const Mesh& mesh, const CrashScenario& scenario);

struct DesignSample {
  std::size_t id = 0;
  std::vector<double> component_thickness;  // mm, one per component

  // Per-node thickness via the mesh's component ids.
  std::vector<double> node_thickness(const Mesh& mesh) const;
};

// Per component, thickness uniform in [0.8, 1.2] x nominal. Seeded; samples distinct.
std::vector<DesignSample> sample_doe(std::size_t num_samples, std::size_t num_components, double nominal,
                                     std::uint64_t seed);

struct Trajectory {
  std::vector<double> thickness;  // per node, mm
  std::vector<Tensor> frames;     // T tensors of n x 3, mm
  Vec3 v0{0.0, 0.0, 0.0};         // initial velocity, mm/s
};

struct EnergyAudit {
  double initial_kinetic = 0.0;
  double max_relative_error = 0.0;  // max_t |E(t) - E(0)| / E_kin(0)
  double final_kinetic = 0.0;
  double final_elastic = 0.0;
  double plastic_dissipated = 0.0;
  double damping_dissipated = 0.0;
};

struct SimulationResult {
  Trajectory trajectory;
  EnergyAudit audit;
};

// Explicit central-difference integration; records every substeps-th state.
// Throws ConfigError if the scenario violates the stability bound and
// NumericalError if a node drifts more than 10x the domain diameter.
SimulationResult simulate_crash(const Mesh& mesh, const DesignSample& design, const CrashScenario& scenario);

// Finite-difference kinematics of a trajectory at the frame spacing dt. The
// state before frame 0 is X0 - dt v0.
Tensor frame_velocity(const Trajectory& traj, std::size_t t, double dt);      // (X_t - X_{t-1}) / dt
Tensor frame_acceleration(const Trajectory& traj, std::size_t t, double dt);  // (X_{t+1} - 2X_t + X_{t-1}) / dt^2
Tensor previous_state(const Trajectory& traj, std::size_t t, double dt);      // X_{t-1}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;

  std::size_t channels() const noexcept { return mean.size(); }
  // Per-column (v - mean) / std and its inverse.
  Tensor normalize(const Tensor& v) const;
  Tensor denormalize(const Tensor& v) const;
  std::vector<double> inv_std() const;
};

inline constexpr double kStdFloor = 1e-8;

struct Normalization {
  ChannelStats position;
  ChannelStats velocity;
  ChannelStats acceleration;
  ChannelStats thickness;
  ChannelStats wall_distance;
  // Pooled standard deviation of positions over all channels; scales the loss.
  double position_scale = 1.0;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded permutation split into 90 / 5 / 5 (val and test rounded, train the rest).
Splits make_splits(std::size_t num_samples, std::uint64_t seed);

inline constexpr int kDatasetSchemaVersion = 1;

struct Dataset {
  Mesh mesh;
  CrashScenario scenario;
  std::vector<Trajectory> samples;
  std::vector<DesignSample> designs;
  std::vector<double> energy_error;
  Splits splits;
  Normalization stats;
  std::uint64_t seed = 0;
  double wall_x = 0.0;

  double dt() const { return scenario.frame_dt(); }
  std::size_t num_frames() const { return scenario.frames; }
  std::size_t num_nodes() const { return mesh.num_nodes(); }
};

// Per-channel statistics over the listed samples only, using frames
// [0, frames) (positions, velocities, wall distances) and [0, frames - 1)
// (accelerations). Throws DataError on an empty split.
Normalization compute_normalization(const Dataset& dataset, std::span<const std::size_t> samples);

// Rounds every stored array to float32, matching the on-disk precision.
void quantize_to_float32(Dataset& dataset);

struct GenerateOptions {
  std::size_t num_samples = 80;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// sample_doe -> simulate_crash per sample -> splits -> normalization.
// `progress` (optional) is called once per finished sample, in sample order.
using ProgressFn = std::function<void(std::size_t index, const EnergyAudit& audit)>;
Dataset generate_dataset(const CrashScenario& scenario, const GenerateOptions& options, const ProgressFn& progress = {});

// Directory with manifest.json plus one little-endian float32/int32 file
// per array, each guarded by a CRC32.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

// Stable fingerprint of a mesh (CRC32 over float32 positions and int32 cells).
std::uint32_t mesh_fingerprint(const Mesh& mesh);

}  // namespace crash::datagen
