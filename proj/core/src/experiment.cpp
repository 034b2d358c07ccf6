// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "crash/experiment.hpp"

#include <exception>
#include <thread>

#include "crash/errors.hpp"

namespace crash::experiment {

transient::ModelSpec desk_model_spec(ModelKind kind, Scheme scheme, std::uint64_t seed) {
  transient::ModelSpec spec;
  spec.kind = kind;
  spec.scheme = scheme;
  spec.seed = seed;
  spec.transolver.num_slices = 8;
  spec.transolver.num_layers = 2;
  spec.transolver.hidden_dim = 16;
  spec.transolver.num_heads = 2;
  spec.mgn.num_mp_layers = 3;
  spec.mgn.hidden_dim = 16;
  return spec;
}

transient::SchemeConfig desk_scheme_config(Scheme scheme, std::uint64_t seed) {
  transient::SchemeConfig cfg;
  cfg.scheme = scheme;
  cfg.seed = seed;
  cfg.rollout_len = 14;
  cfg.epochs = 30;
  cfg.lr_start = 1e-3;
  if (scheme == Scheme::ar_rt) {
    // Summed rollout losses give larger, spikier gradients.
    cfg.lr_start = 3e-3;
    cfg.grad_clip = 1.0;
  }
  cfg.lr_end = cfg.lr_start * 0.01;
  return cfg;
}

std::vector<SampleRollout> rollout_samples(const transient::Surrogate& model, const datagen::Dataset& ds,
                                           std::span<const std::size_t> samples, std::size_t horizon,
                                           std::size_t workers) {
  if (horizon + 1 > ds.num_frames()) throw ConfigError("eval: horizon exceeds the trajectory length");
  std::vector<double> times;
  for (std::size_t t = 0; t <= horizon; ++t) times.push_back(double(t) * ds.dt());
  std::vector<SampleRollout> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  auto run = [&](std::size_t w, std::size_t stride) {
    for (std::size_t k = w; k < samples.size(); k += stride) {
      try {
        const std::size_t s = samples[k];
        if (s >= ds.samples.size()) throw IndexError("eval: sample " + std::to_string(s) + " out of range");
        const auto& tr = ds.samples[s];
        SampleRollout r;
        r.sample = s;
        r.pred = transient::predict(model, tr.thickness, tr.frames[0], tr.v0, times);
        r.gt.assign(tr.frames.begin(), tr.frames.begin() + std::ptrdiff_t(horizon + 1));
        r.error = evaluation::relative_l2(r.pred, r.gt, tr.frames[0]);
        out[k] = std::move(r);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (n == 1) {
    run(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(run, w, n);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

evaluation::SchemeCurve scheme_curve(const std::string& name, std::span<const SampleRollout> rollouts) {
  evaluation::SchemeCurve c;
  c.name = name;
  std::vector<std::vector<double>> curves;
  for (const auto& r : rollouts) {
    curves.push_back(r.error);
    c.test_samples.push_back(r.sample);
  }
  c.curve = evaluation::aggregate_curves(curves);
  return c;
}

std::string run_label(const transient::ModelSpec& spec) {
  return transient::to_string(spec.kind) + "_" + transient::to_string(spec.scheme);
}

}  // namespace crash::experiment
