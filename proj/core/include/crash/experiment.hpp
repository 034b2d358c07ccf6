// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "crash/evaluation.hpp"
#include "crash/transient.hpp"

// Glue between training and evaluation: desk-scale presets and rollouts
// of a trained model over a set of dataset samples.
namespace crash::experiment {

using diff::Tensor;
using transient::ModelKind;
using transient::Scheme;

// Hyperparameters sized for a single desktop CPU (see README).
transient::ModelSpec desk_model_spec(ModelKind kind, Scheme scheme, std::uint64_t seed = 0);
transient::SchemeConfig desk_scheme_config(Scheme scheme, std::uint64_t seed = 0);

// Frames evaluated per sample: 0..horizon.
inline constexpr std::size_t kDefaultHorizon = 14;

struct SampleRollout {
  std::size_t sample = 0;
  std::vector<Tensor> pred;  // full mesh, frames 0..horizon
  std::vector<Tensor> gt;
  std::vector<double> error;  // relative L2 per frame
};

// Predicts frames 0..horizon for each sample, in parallel over samples.
std::vector<SampleRollout> rollout_samples(const transient::Surrogate& model, const datagen::Dataset& ds,
                                           std::span<const std::size_t> samples, std::size_t horizon,
                                           std::size_t workers = 1);

evaluation::SchemeCurve scheme_curve(const std::string& name, std::span<const SampleRollout> rollouts);

// "transolver_ar-rt" style label.
std::string run_label(const transient::ModelSpec& spec);

}  // namespace crash::experiment
