// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <thread>

#include "crash/errors.hpp"
#include "crash/random.hpp"
#include "crash/transient.hpp"

namespace crash::transient {

void SchemeConfig::validate() const {
  if (rollout_len < 1) throw ConfigError("scheme: rollout_len must be >= 1");
  if (dt < 0.0) throw ConfigError("scheme: dt must be positive (or 0 for the dataset value)");
  if (epochs < 1) throw ConfigError("scheme: epochs must be >= 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) throw ConfigError("scheme: need lr_start >= lr_end > 0");
  if (batch_size < 1) throw ConfigError("scheme: batch_size must be >= 1");
  if (noise_std < 0.0) throw ConfigError("scheme: noise_std must be non-negative");
  if (grad_clip < 0.0) throw ConfigError("scheme: grad_clip must be non-negative");
  if (workers < 1) throw ConfigError("scheme: workers must be >= 1");
}

double cosine_lr(std::size_t epoch, std::size_t total_epochs, double lr_start, double lr_end) {
  if (epoch == 0 || total_epochs == 0) return lr_start;
  if (epoch >= total_epochs) return lr_end;
  const double c = std::cos(std::numbers::pi * double(epoch) / double(total_epochs));
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + c);
}

Adam::Adam(diff::ParameterSet& params, double beta1, double beta2, double eps)
    : params_(&params), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  std::size_t k = 0;
  for (auto& p : *params_) {
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    ++k;
    if (p.grad.empty()) continue;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

std::vector<TrainItem> make_items(const SchemeConfig& cfg, std::span<const std::size_t> samples) {
  std::vector<TrainItem> items;
  for (std::size_t s : samples) {
    switch (cfg.scheme) {
      case Scheme::tc:
        for (std::size_t t = 0; t <= cfg.rollout_len; ++t) items.push_back({s, t});
        break;
      case Scheme::ar_ot:
        for (std::size_t t = 0; t < cfg.rollout_len; ++t) items.push_back({s, t});
        break;
      case Scheme::ar_rt:
        items.push_back({s, 0});
        break;
    }
  }
  return items;
}

namespace {

void check_compatible(const Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg) {
  if (model.spec().scheme != cfg.scheme) {
    throw ConfigError("train: model built for " + to_string(model.spec().scheme) + " but scheme is " +
                      to_string(cfg.scheme));
  }
  if (model.num_full_nodes() != ds.num_nodes()) throw DataError("train: model and dataset meshes differ");
  if (cfg.dt > 0.0 && std::abs(cfg.dt - ds.dt()) > 1e-12 * ds.dt()) {
    throw ConfigError("train: dt disagrees with the dataset frame spacing");
  }
  if (ds.num_frames() < 2) throw DataError("train: trajectories need at least 2 frames");
  if (cfg.rollout_len + 1 > ds.num_frames()) {
    throw ConfigError("train: rollout_len " + std::to_string(cfg.rollout_len) + " exceeds the trajectory length");
  }
}

Var scaled_error(Tape& tape, Var pred, const Tensor& target, double inv_scale) {
  return diff::mean_square(diff::scale(diff::sub(pred, tape.constant(target)), inv_scale));
}

Tensor with_noise(Tensor x, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (double& v : x.values()) v += sigma * rng.normal();
  return x;
}

}  // namespace

double item_loss(const Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg, const TrainItem& item,
                 diff::GradSink* sink, std::uint64_t noise_seed) {
  if (item.sample >= ds.samples.size()) throw IndexError("item_loss: sample out of range");
  const datagen::Trajectory& traj = ds.samples[item.sample];
  const double dt = ds.dt();
  const double inv_scale = 1.0 / ds.stats.position_scale;
  const Tensor tau = model.restrict_thickness(traj.thickness);
  Tape tape;
  Var loss;
  switch (cfg.scheme) {
    case Scheme::tc: {
      if (item.frame >= traj.frames.size()) throw IndexError("item_loss: frame out of range");
      Var pred = model.positions_at(tape, model.restrict(traj.frames[0]), tau, double(item.frame) * dt);
      loss = scaled_error(tape, pred, model.restrict(traj.frames[item.frame]), inv_scale);
      break;
    }
    case Scheme::ar_ot:
    case Scheme::ar_rt: {
      const std::size_t steps = cfg.scheme == Scheme::ar_rt ? cfg.rollout_len : 1;
      if (item.frame + steps >= traj.frames.size()) throw IndexError("item_loss: rollout exceeds the trajectory");
      Tensor x_cur = model.restrict(traj.frames[item.frame]);
      Tensor x_prev = model.restrict(datagen::previous_state(traj, item.frame, dt));
      if (cfg.scheme == Scheme::ar_ot && cfg.noise_std > 0.0) {
        x_cur = with_noise(std::move(x_cur), cfg.noise_std, noise_seed);
        x_prev = with_noise(std::move(x_prev), cfg.noise_std, noise_seed ^ 0x9e3779b97f4a7c15ULL);
      }
      Var cur = tape.constant(std::move(x_cur));
      Var prev = tape.constant(std::move(x_prev));
      const diff::SegmentFn fn = [&model, &tau](Tape& sub, std::span<const Var> in) {
        return std::vector<Var>{model.step(sub, in[0], in[1], tau)};
      };
      for (std::size_t k = 1; k <= steps; ++k) {
        const Var inputs[2] = {cur, prev};
        Var next = tape.segment(inputs, fn, cfg.checkpoint_every_step).front();
        Var term = scaled_error(tape, next, model.restrict(traj.frames[item.frame + k]), inv_scale);
        loss = k == 1 ? term : diff::add(loss, term);
        prev = cur;
        cur = next;
      }
      break;
    }
  }
  const double value = loss.value().item();
  if (sink) tape.backward(loss, sink);
  return value;
}

double evaluate_loss(const Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                     std::span<const std::size_t> samples) {
  const auto items = make_items(cfg, samples);
  if (items.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(items.size());
  const std::size_t workers = std::min(cfg.workers, items.size());
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < items.size(); i += workers) losses[i] = item_loss(model, ds, cfg, items[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  return total / double(items.size());
}

TrainResult train(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_compatible(model, ds, cfg);
  const auto items = make_items(cfg, ds.splits.train);
  if (items.empty()) throw DataError("train: empty training split");

  diff::ParameterSet& params = model.params();
  Adam opt(params);
  Rng order_rng(cfg.seed);
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best;
  const std::size_t B = cfg.batch_size;
  std::vector<diff::GradSink> sinks(B);
  std::vector<double> batch_losses(B);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_start, cfg.lr_end);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += B) {
      const std::size_t count = std::min(B, order.size() - begin);
      const std::size_t workers = std::min(cfg.workers, count);
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(workers);
      auto run = [&](std::size_t w) {
        try {
          for (std::size_t b = w; b < count; b += workers) {
            const std::size_t idx = order[begin + b];
            sinks[b] = params.make_sink();
            const std::uint64_t noise_seed = cfg.seed * 1000003ULL + epoch * 7919ULL + idx;
            batch_losses[b] = item_loss(model, ds, cfg, items[idx], &sinks[b], noise_seed);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      };
      if (workers == 1) {
        run(0);
      } else {
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      params.zero_grad();
      for (std::size_t b = 0; b < count; ++b) {
        params.absorb(sinks[b]);
        epoch_loss += batch_losses[b];
      }
      const double inv = 1.0 / double(count);
      double norm_sq = 0.0;
      for (auto& p : params) {
        for (double& g : p.grad.values()) {
          g *= inv;
          norm_sq += g * g;
        }
      }
      if (!std::isfinite(norm_sq)) throw NumericalError("train: non-finite gradient at epoch " + std::to_string(epoch));
      if (cfg.grad_clip > 0.0 && std::sqrt(norm_sq) > cfg.grad_clip) {
        const double f = cfg.grad_clip / std::sqrt(norm_sq);
        for (auto& p : params) {
          for (double& g : p.grad.values()) g *= f;
        }
      }
      opt.step(lr);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = epoch_loss / double(items.size());
    rec.val_loss = evaluate_loss(model, ds, cfg, ds.splits.val);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double score = std::isnan(rec.val_loss) ? rec.train_loss : rec.val_loss;
    if (score < result.best_loss) {
      result.best_loss = score;
      result.best_epoch = epoch;
      best.clear();
      for (const auto& p : params) best.push_back(p.value);
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  std::size_t k = 0;
  for (auto& p : params) p.value = best[k++];
  return result;
}

namespace {

TrainResult train_checked(Surrogate& model, const datagen::Dataset& ds, SchemeConfig cfg, Scheme expected,
                          const EpochCallback& on_epoch) {
  if (cfg.scheme != expected) {
    throw ConfigError("train_" + to_string(expected) + ": config scheme is " + to_string(cfg.scheme));
  }
  return train(model, ds, cfg, on_epoch);
}

}  // namespace

TrainResult train_tc(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                     const EpochCallback& on_epoch) {
  return train_checked(model, ds, cfg, Scheme::tc, on_epoch);
}
TrainResult train_ar_ot(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                        const EpochCallback& on_epoch) {
  return train_checked(model, ds, cfg, Scheme::ar_ot, on_epoch);
}
TrainResult train_ar_rt(Surrogate& model, const datagen::Dataset& ds, const SchemeConfig& cfg,
                        const EpochCallback& on_epoch) {
  return train_checked(model, ds, cfg, Scheme::ar_rt, on_epoch);
}

}  // namespace crash::transient
