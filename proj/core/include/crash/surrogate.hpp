// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "crash/datagen.hpp"
#include "crash/geometry.hpp"
#include "crash/mgn.hpp"
#include "crash/transolver.hpp"

// A network together with its feature recipe: which inputs it sees, how
// they are normalized, what its output means physically, and (for the
// multiscale graph) how fields move between the full mesh and the sampled
// node set the model runs on.
namespace crash::transient {

using diff::Tape;
using diff::Tensor;
using diff::Var;

enum class Scheme { tc, ar_ot, ar_rt };
enum class ModelKind { transolver, mgn, mgn_multiscale };

std::string to_string(Scheme s);
std::string to_string(ModelKind k);
// Accept "tc", "ar-ot"/"ar_ot", "ar-rt"/"ar_rt"; ConfigError otherwise.
Scheme parse_scheme(const std::string& s);
// Accept "transolver", "mgn", "mgn-multiscale"/"mgn_multiscale".
ModelKind parse_model_kind(const std::string& s);
inline bool is_autoregressive(Scheme s) { return s != Scheme::tc; }

// Input feature width for a model/scheme pair.
//   AR: [tau, velocity (3), wall distance] (+ positions (3) for transolver)
//   TC: [tau, X0 (3), t / t_max, wall distance]
std::size_t feature_dim(ModelKind kind, Scheme scheme);

struct ModelSpec {
  ModelKind kind = ModelKind::transolver;
  Scheme scheme = Scheme::ar_rt;
  transolver::TransolverConfig transolver;
  mgn::MgnConfig mgn;
  geometry::MultiScaleParams multiscale;
  std::size_t k_interp = 4;
  std::uint64_t seed = 0;
};

struct PhysicalContext {
  double dt = 0.0;     // frame spacing, s
  double t_max = 0.0;  // TC time normalizer, s
  double wall_x = 0.0;
  datagen::Normalization stats;

  static PhysicalContext from_dataset(const datagen::Dataset& ds);
};

class Surrogate {
 public:
  Surrogate(const ModelSpec& spec, const geometry::Mesh& mesh, const PhysicalContext& context);
  Surrogate(const Surrogate&) = delete;
  Surrogate& operator=(const Surrogate&) = delete;

  const ModelSpec& spec() const noexcept { return spec_; }
  const PhysicalContext& context() const noexcept { return context_; }
  diff::ParameterSet& params();
  const diff::ParameterSet& params() const;

  std::size_t num_full_nodes() const noexcept { return reference_full_.rows(); }
  // Nodes the network runs on: the sampled set for the multiscale graph,
  // the full mesh otherwise.
  std::size_t num_model_nodes() const noexcept { return reference_model_.rows(); }
  bool multiscale() const noexcept { return multiscale_.has_value(); }
  const geometry::MultiScaleGraph* multiscale_graph() const { return multiscale_ ? &*multiscale_ : nullptr; }
  const mgn::EdgeIndex& edge_index() const noexcept { return index_; }
  const Tensor& reference_positions() const noexcept { return reference_model_; }
  std::uint32_t mesh_fingerprint() const noexcept { return mesh_fingerprint_; }

  // Full-mesh field -> model nodes (identity unless multiscale).
  Tensor restrict(const Tensor& full) const;
  Tensor restrict_thickness(std::span<const double> tau_full) const;  // model nodes x 1
  // Model-node positions -> full mesh; the multiscale path interpolates the
  // displacement from the reference configuration.
  Tensor lift(const Tensor& model_positions) const;

  // Features for this model's scheme. AR requires x_prev and no time; TC
  // requires a time in [0, t_max] and no x_prev. ConfigError otherwise.
  Var assemble_features(Tape& tape, Var x_cur, std::optional<Var> x_prev, const Tensor& tau,
                        std::optional<double> t) const;

  // Raw network output (normalized units).
  Var network(Tape& tape, Var features, Var current_positions) const;

  // Physical acceleration (mm/s^2) at the model nodes.
  Var acceleration(Tape& tape, Var x_cur, Var x_prev, const Tensor& tau) const;
  // One Verlet step on the model nodes.
  Var step(Tape& tape, Var x_cur, Var x_prev, const Tensor& tau) const;
  // TC: positions at time t from the initial model-node positions.
  Var positions_at(Tape& tape, const Tensor& x0, const Tensor& tau, double t) const;

  transolver::TransolverModel* transolver_model() noexcept { return transolver_.get(); }
  mgn::MgnModel* mgn_model() noexcept { return mgn_.get(); }

 private:
  ModelSpec spec_;
  PhysicalContext context_;
  Tensor reference_full_;
  Tensor reference_model_;
  std::optional<geometry::MultiScaleGraph> multiscale_;
  geometry::InterpolationStencil stencil_;
  mgn::EdgeIndex index_;
  double edge_scale_ = 1.0;
  std::uint32_t mesh_fingerprint_ = 0;
  std::unique_ptr<transolver::TransolverModel> transolver_;
  std::unique_ptr<mgn::MgnModel> mgn_;
};

}  // namespace crash::transient
