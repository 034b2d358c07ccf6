// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crash/datagen.hpp"
#include "crash/surrogate.hpp"

namespace crash::transient {

// Central-difference update dt^2 a + 2 x_cur - x_prev. NumericalError on a
// non-finite acceleration, ShapeError on mismatched shapes.
Tensor verlet_step(const Tensor& x_cur, const Tensor& x_prev, const Tensor& accel, double dt);

struct RolloutState {
  Tensor x_cur;
  Tensor x_prev;
  std::size_t step = 0;
};

// AR rollout on the full mesh: seeds x_prev = x0 - dt v0 and returns
// [x0, x1, ..., x_steps]. NumericalError names the failing step.
std::vector<Tensor> rollout(const Surrogate& model, const Tensor& x0, const geometry::Vec3& v0,
                            std::span<const double> tau, std::size_t steps);

// Trajectory at the requested times (s). TC evaluates each time
// independently; AR rolls out to the latest time, which must lie on the
// frame grid. Times outside [0, t_max] are rejected for TC.
std::vector<Tensor> predict(const Surrogate& model, std::span<const double> tau, const Tensor& x0,
                            const geometry::Vec3& v0, std::span<const double> times);

struct SchemeConfig {
  Scheme scheme = Scheme::ar_rt;
  std::size_t rollout_len = 14;
  double dt = 0.0;  // 0 takes the dataset frame spacing; otherwise it must match
  std::size_t epochs = 8000;
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  bool checkpoint_every_step = true;
  double noise_std = 0.0;  // AR-OT input noise, mm
  double grad_clip = 0.0;  // global gradient-norm clip; 0 disables
  std::size_t workers = 1;

  void validate() const;
};

// lr(e) = lr_end + (lr_start - lr_end) (1 + cos(pi e / E)) / 2, with the
// endpoints returned exactly.
double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end);

class Adam {
 public:
  explicit Adam(diff::ParameterSet& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  // Applies Parameter::grad; does not zero it.
  void step(double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  diff::ParameterSet* params_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

// One training example: a sample and (for TC and AR-OT) a frame index.
struct TrainItem {
  std::size_t sample = 0;
  std::size_t frame = 0;
};

// Examples drawn from `samples` for the configured scheme.
//   TC:    (sample, t) for t in [0, L]
//   AR-OT: (sample, t) for t in [0, L)      target frame t+1
//   AR-RT: (sample, 0)                      L-step rollout
std::vector<TrainItem> make_items(const SchemeConfig& cfg, std::span<const std::size_t> samples);

// Loss of one example, scaled by the pooled position scale. When `sink` is
// given the gradient is accumulated into it. `noise_seed` perturbs AR-OT
// inputs when cfg.noise_std > 0.
double item_loss(const Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg, const TrainItem& item,
                 diff::GradSink* sink = nullptr, std::uint64_t noise_seed = 0);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when the validation split is empty
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place and leaves the best-validation parameters in the model
// (training loss stands in when there is no validation split).
TrainResult train(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train_tc(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                     const EpochCallback& on_epoch = {});
TrainResult train_ar_ot(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                        const EpochCallback& on_epoch = {});
TrainResult train_ar_rt(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                        const EpochCallback& on_epoch = {});

// Mean item loss over the given samples without gradients.
double evaluate_loss(const Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                     std::span<const std::size_t> samples);

}  // namespace crash::transient
