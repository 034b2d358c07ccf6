// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/surrogate.hpp"

#include <cmath>

#include "crash/errors.hpp"

namespace crash::transient {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::tc: return "tc";
    case Scheme::ar_ot: return "ar-ot";
    case Scheme::ar_rt: return "ar-rt";
  }
  return "?";
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::transolver: return "transolver";
    case ModelKind::mgn: return "mgn";
    case ModelKind::mgn_multiscale: return "mgn-multiscale";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  if (s == "tc") return Scheme::tc;
  if (s == "ar-ot" || s == "ar_ot") return Scheme::ar_ot;
  if (s == "ar-rt" || s == "ar_rt") return Scheme::ar_rt;
  throw ConfigError("unknown scheme '" + s + "' (expected tc, ar-ot, ar-rt)");
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "transolver") return ModelKind::transolver;
  if (s == "mgn") return ModelKind::mgn;
  if (s == "mgn-multiscale" || s == "mgn_multiscale") return ModelKind::mgn_multiscale;
  throw ConfigError("unknown model '" + s + "' (expected transolver, mgn, mgn-multiscale)");
}

std::size_t feature_dim(ModelKind kind, Scheme scheme) {
  if (scheme == Scheme::tc) return 6;
  return kind == ModelKind::transolver ? 8 : 5;
}

PhysicalContext PhysicalContext::from_dataset(const datagen::Dataset& ds) {
  PhysicalContext c;
  c.dt = ds.dt();
  c.t_max = ds.scenario.t_max();
  c.wall_x = ds.wall_x;
  c.stats = ds.stats;
  return c;
}

Surrogate::Surrogate(const ModelSpec& spec, const geometry::Mesh& mesh, const PhysicalContext& context)
    : spec_(spec), context_(context) {
  if (!(context_.dt > 0.0)) throw ConfigError("surrogate: dt must be positive");
  if (!(context_.t_max > 0.0)) throw ConfigError("surrogate: t_max must be positive");
  mesh.validate();
  reference_full_ = geometry::to_tensor(mesh.positions);
  mesh_fingerprint_ = datagen::mesh_fingerprint(mesh);
  const std::size_t fin = feature_dim(spec_.kind, spec_.scheme);
  if (spec_.kind == ModelKind::transolver) {
    reference_model_ = reference_full_;
    spec_.transolver.in_dim = fin;
    spec_.transolver.out_dim = 3;
    transolver_ = std::make_unique<transolver::TransolverModel>(spec_.transolver, spec_.seed);
    return;
  }
  geometry::Graph graph;
  if (spec_.kind == ModelKind::mgn_multiscale) {
    if (spec_.k_interp < 1) throw ConfigError("surrogate: k_interp must be >= 1");
    multiscale_ = geometry::build_multiscale_graph(mesh, spec_.multiscale);
    stencil_ = geometry::make_interpolation_stencil(*multiscale_, spec_.k_interp);
    graph = multiscale_->message_graph();
    reference_model_ = geometry::to_tensor(multiscale_->sampled_positions);
  } else {
    graph = geometry::edges_from_cells(mesh);
    reference_model_ = reference_full_;
  }
  index_ = mgn::EdgeIndex::from(graph);
  double total = 0.0;
  for (std::size_t e = 0; e < index_.num_edges(); ++e) {
    double sq = 0.0;
    for (std::size_t d = 0; d < 3; ++d) {
      const double diff = reference_model_.at(index_.dst[e], d) - reference_model_.at(index_.src[e], d);
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  if (index_.num_edges() > 0 && total > 0.0) edge_scale_ = total / double(index_.num_edges());
  spec_.mgn.node_in = fin;
  spec_.mgn.edge_in = 8;
  spec_.mgn.out_dim = 3;
  mgn_ = std::make_unique<mgn::MgnModel>(spec_.mgn, spec_.seed);
}

diff::ParameterSet& Surrogate::params() { return transolver_ ? transolver_->params() : mgn_->params(); }
const diff::ParameterSet& Surrogate::params() const {
  return transolver_ ? transolver_->params() : mgn_->params();
}

Tensor Surrogate::restrict(const Tensor& full) const {
  if (full.rows() != num_full_nodes()) throw ShapeError("restrict: field rows do not match the mesh");
  return multiscale_ ? geometry::restrict_field(full, *multiscale_) : full;
}

Tensor Surrogate::restrict_thickness(std::span<const double> tau_full) const {
  if (tau_full.size() != num_full_nodes()) throw ShapeError("restrict_thickness: one value per node required");
  Tensor col({tau_full.size(), 1}, std::vector<double>(tau_full.begin(), tau_full.end()));
  return restrict(col);
}

Tensor Surrogate::lift(const Tensor& model_positions) const {
  if (model_positions.rows() != num_model_nodes() || model_positions.cols() != 3) {
    throw ShapeError("lift: expected model-node positions");
  }
  if (!multiscale_) return model_positions;
  Tensor disp = model_positions;
  for (std::size_t i = 0; i < disp.size(); ++i) disp[i] -= reference_model_[i];
  Tensor full = geometry::apply_interpolation(stencil_, disp);
  for (std::size_t i = 0; i < full.size(); ++i) full[i] += reference_full_[i];
  return full;
}

namespace {

std::vector<double> neg_mean_over_std(const datagen::ChannelStats& s) {
  std::vector<double> out(s.channels());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -s.mean[i] / s.std[i];
  return out;
}

}  // namespace

Var Surrogate::assemble_features(Tape& tape, Var x_cur, std::optional<Var> x_prev, const Tensor& tau,
                                 std::optional<double> t) const {
  const auto& st = context_.stats;
  if (tau.rows() != num_model_nodes() || tau.cols() != 1) throw ShapeError("features: tau must be model nodes x 1");
  if (x_cur.rows() != num_model_nodes() || x_cur.cols() != 3) throw ShapeError("features: positions must be n x 3");
  Var tau_n = diff::affine_cols(tape.constant(tau), st.thickness.inv_std(), neg_mean_over_std(st.thickness));
  const auto& wd = st.wall_distance;
  Var wall = diff::affine_cols(diff::slice_cols(x_cur, 0, 1), std::vector<double>{-1.0 / wd.std[0]},
                               std::vector<double>{(context_.wall_x - wd.mean[0]) / wd.std[0]});
  if (spec_.scheme == Scheme::tc) {
    if (x_prev) throw ConfigError("features: the TC scheme takes no previous state");
    if (!t) throw ConfigError("features: the TC scheme needs a time");
    if (*t < 0.0 || *t > context_.t_max) throw ConfigError("features: TC time outside [0, t_max]");
    Var pos = diff::affine_cols(x_cur, st.position.inv_std(), neg_mean_over_std(st.position));
    Var time = tape.constant(Tensor({num_model_nodes(), 1}, *t / context_.t_max));
    return diff::concat({tau_n, pos, time, wall});
  }
  if (t) throw ConfigError("features: AR schemes take no time input");
  if (!x_prev) throw ConfigError("features: AR schemes need the previous state");
  std::vector<double> vscale = st.velocity.inv_std();
  for (double& v : vscale) v /= context_.dt;
  Var vel = diff::affine_cols(diff::sub(x_cur, *x_prev), vscale, neg_mean_over_std(st.velocity));
  if (spec_.kind == ModelKind::transolver) {
    Var pos = diff::affine_cols(x_cur, st.position.inv_std(), neg_mean_over_std(st.position));
    return diff::concat({tau_n, vel, wall, pos});
  }
  return diff::concat({tau_n, vel, wall});
}

Var Surrogate::network(Tape& tape, Var features, Var current_positions) const {
  if (transolver_) return transolver_->forward(tape, features);
  Var edges = diff::scale(
      mgn::assemble_edge_features(current_positions, tape.constant(reference_model_), index_), 1.0 / edge_scale_);
  return mgn_->forward(tape, features, edges, index_);
}

Var Surrogate::acceleration(Tape& tape, Var x_cur, Var x_prev, const Tensor& tau) const {
  if (spec_.scheme == Scheme::tc) throw ConfigError("acceleration: not available for the TC scheme");
  Var out = network(tape, assemble_features(tape, x_cur, x_prev, tau, std::nullopt), x_cur);
  const auto& a = context_.stats.acceleration;
  return diff::affine_cols(out, a.std, a.mean);
}

Var Surrogate::step(Tape& tape, Var x_cur, Var x_prev, const Tensor& tau) const {
  return diff::verlet(x_cur, x_prev, acceleration(tape, x_cur, x_prev, tau), context_.dt);
}

Var Surrogate::positions_at(Tape& tape, const Tensor& x0_model, const Tensor& tau, double t) const {
  if (spec_.scheme != Scheme::tc) throw ConfigError("positions_at: only the TC scheme predicts positions");
  Var x0 = tape.constant(x0_model);
  Var out = network(tape, assemble_features(tape, x0, std::nullopt, tau, t), x0);
  const auto& p = context_.stats.position;
  return diff::affine_cols(out, p.std, p.mean);
}

}  // namespace crash::transient
