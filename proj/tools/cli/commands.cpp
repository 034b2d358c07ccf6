// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "crash/checkpoint.hpp"
#include "crash/errors.hpp"
#include "crash/experiment.hpp"

namespace crash::cli {

namespace fs = std::filesystem;
using transient::Surrogate;

namespace {

std::ostream& log(const CommandContext& ctx) { return *ctx.log; }

void prepare_out(const fs::path& out, bool force) {
  if (out.empty()) throw ConfigError("--out is required");
  if (fs::exists(out) && !fs::is_directory(out)) throw ConfigError("output path " + out.string() + " is a file");
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force) throw ConfigError("output directory " + out.string() + " is not empty (use --force)");
    fs::remove_all(out);
  }
  fs::create_directories(out);
}

datagen::Dataset load_dataset(const fs::path& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  return datagen::read_dataset(dir);
}

const std::vector<std::size_t>& split_of(const datagen::Dataset& ds, const std::string& name) {
  if (name == "train") return ds.splits.train;
  if (name == "val") return ds.splits.val;
  return ds.splits.test;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

}  // namespace

void cmd_gen_data(const CommandContext& ctx) {
  const Json& c = ctx.config;
  const auto scenario = scenario_from(c);
  datagen::GenerateOptions opt;
  opt.num_samples = c["doe"]["num_samples"].get<std::size_t>();
  opt.seed = c["seed"].get<std::uint64_t>();
  opt.workers = c["workers"].get<std::size_t>();
  prepare_out(ctx.out, ctx.force);
  log(ctx) << "generating " << opt.num_samples << " samples on a " << scenario.nx << "x" << scenario.ny
           << " sheet (" << scenario.frames << " frames, dt " << fmt(scenario.frame_dt() * 1e3) << " ms)\n";
  const datagen::Dataset ds = datagen::generate_dataset(scenario, opt, [&](std::size_t i, const datagen::EnergyAudit& a) {
    log(ctx) << "sample " << (i + 1) << "/" << opt.num_samples << "  energy error " << fmt(100.0 * a.max_relative_error, 3)
             << "%  plastic " << fmt(100.0 * a.plastic_dissipated / a.initial_kinetic, 3) << "% of E0\n";
  });
  datagen::write_dataset(ds, ctx.out);
  write_config(c, ctx.out / "config.json");
  const auto worst = *std::max_element(ds.energy_error.begin(), ds.energy_error.end());
  double mean = 0.0;
  for (double e : ds.energy_error) mean += e;
  mean /= double(ds.energy_error.size());
  log(ctx) << "energy audit: mean " << fmt(100.0 * mean, 3) << "%  max " << fmt(100.0 * worst, 3) << "%\n"
           << "wrote " << ds.samples.size() << " samples, " << ds.num_nodes() << " nodes, " << ds.num_frames()
           << " frames; split " << ds.splits.train.size() << "/" << ds.splits.val.size() << "/"
           << ds.splits.test.size() << " -> " << ctx.out.string() << "\n";
}

void cmd_train(const CommandContext& ctx) {
  const Json& c = ctx.config;
  const datagen::Dataset ds = load_dataset(ctx.data);
  const auto spec = model_spec_from(c);
  const auto cfg = scheme_config_from(c);
  prepare_out(ctx.out, ctx.force);
  write_config(c, ctx.out / "config.json");
  Surrogate model(spec, ds.mesh, transient::PhysicalContext::from_dataset(ds));
  log(ctx) << "training " << experiment::run_label(spec) << " (" << model.params().total_values() << " parameters, "
           << model.num_model_nodes() << " model nodes) for " << cfg.epochs << " epochs\n";
  std::ofstream metrics(ctx.out / "metrics.csv");
  metrics << "epoch,lr,train_loss,val_loss\n" << std::setprecision(10);
  const auto res = transient::train(model, ds, cfg, [&](const transient::EpochRecord& r) {
    metrics << r.epoch << "," << r.lr << "," << r.train_loss << "," << r.val_loss << "\n";
    metrics.flush();
    log(ctx) << "epoch " << r.epoch << "  lr " << fmt(r.lr, 3) << "  train " << fmt(r.train_loss) << "  val "
             << fmt(r.val_loss) << "  " << fmt(r.seconds, 3) << " s\n";
  });
  if (!metrics) throw DataError("cannot write metrics.csv");
  transient::save_checkpoint(model, ctx.out / "checkpoint");
  log(ctx) << "best epoch " << res.best_epoch << "  loss " << fmt(res.best_loss, 10) << " -> "
           << (ctx.out / "checkpoint").string() << "\n";
}

void cmd_eval(const CommandContext& ctx) {
  const Json& c = ctx.config;
  if (ctx.checkpoints.empty()) throw ConfigError("--checkpoint is required");
  const datagen::Dataset ds = load_dataset(ctx.data);
  const std::string split = c["eval"]["split"].get<std::string>();
  const auto& samples = split_of(ds, split);
  if (samples.empty()) throw DataError("eval: the " + split + " split is empty");
  const auto horizon = c["eval"]["horizon"].get<std::size_t>();
  const auto dump = c["eval"]["dump_sample"].get<std::size_t>();
  if (dump >= samples.size()) throw ConfigError("eval.dump_sample exceeds the split size");
  std::vector<std::size_t> probes = c["eval"]["probes"].get<std::vector<std::size_t>>();
  if (probes.empty()) probes = evaluation::default_probes(ds.mesh);
  const std::size_t workers = c["workers"].get<std::size_t>();

  std::vector<std::unique_ptr<Surrogate>> models;
  for (const auto& ck : ctx.checkpoints) models.push_back(transient::load_checkpoint(ck, ds.mesh));
  prepare_out(ctx.out, ctx.force);
  write_config(c, ctx.out / "config.json");

  std::vector<evaluation::SchemeCurve> curves;
  std::vector<std::string> labels;
  for (std::size_t m = 0; m < models.size(); ++m) {
    std::string label = experiment::run_label(models[m]->spec());
    if (std::count(labels.begin(), labels.end(), label)) label += "_" + std::to_string(m);
    labels.push_back(label);
    log(ctx) << "evaluating " << label << " on " << samples.size() << " " << split << " samples\n";
    const auto rollouts = experiment::rollout_samples(*models[m], ds, samples, horizon, workers);
    curves.push_back(experiment::scheme_curve(label, rollouts));
    const fs::path dir = ctx.out / label;
    fs::create_directories(dir);
    evaluation::write_error_curve_csv(dir / "error_curve.csv", curves.back().curve, ds.dt());
    const auto& shown = rollouts[dump];
    for (const auto& h : evaluation::probe_histories(shown.pred, shown.gt, probes, ds.dt())) {
      evaluation::write_probe_csv(dir / ("probe_" + std::to_string(h.node) + ".csv"), h, ds.dt());
    }
    for (std::size_t t = 0; t < shown.pred.size(); ++t) {
      evaluation::write_positions_csv(dir / ("positions_" + std::to_string(t) + ".csv"), shown.pred[t]);
    }
  }
  const auto rows = evaluation::compare_schemes(curves);
  std::ofstream table(ctx.out / "comparison.csv");
  table << "# split=" << split << " samples=" << samples.size() << " horizon=" << horizon << "\n";
  evaluation::write_comparison_csv(table, rows);
  if (!table) throw DataError("cannot write comparison.csv");
  log(ctx) << std::left << std::setw(28) << "model" << std::setw(14) << "final" << std::setw(14) << "time-mean"
           << "slope/frame\n";
  for (const auto& r : rows) {
    log(ctx) << std::left << std::setw(28) << r.name << std::setw(14) << fmt(r.final_mean, 4) << std::setw(14)
             << fmt(r.time_mean, 4) << fmt(r.slope, 4) << "\n";
  }
}

void cmd_bench(const CommandContext& ctx) {
  const Json& c = ctx.config;
  const Json& b = c["bench"];
  const datagen::Dataset ds = load_dataset(ctx.data);
  prepare_out(ctx.out, ctx.force);
  write_config(c, ctx.out / "config.json");
  std::ofstream csv(ctx.out / "bench.csv");
  csv << "metric,value\n" << std::setprecision(8);

  // Per-epoch training time; the first epoch is a warmup.
  const auto epochs = std::max<std::size_t>(2, b["epochs"].get<std::size_t>());
  Json cc = c;
  cc["training"]["scheme"] = b["scheme"];
  cc["training"]["epochs"] = epochs;
  cc["training"]["lr_start"] = nullptr;
  cc["training"]["lr_end"] = nullptr;
  cc["training"]["grad_clip"] = nullptr;
  resolve(cc);
  const auto cfg = scheme_config_from(cc);
  double epoch_time[2] = {0.0, 0.0};
  const char* names[2] = {"mgn", "mgn-multiscale"};
  for (int k = 0; k < 2; ++k) {
    cc["model"]["kind"] = names[k];
    Surrogate model(model_spec_from(cc), ds.mesh, transient::PhysicalContext::from_dataset(ds));
    std::vector<double> secs;
    transient::train(model, ds, cfg, [&](const transient::EpochRecord& r) {
      if (r.epoch > 0) secs.push_back(r.seconds);
    });
    std::sort(secs.begin(), secs.end());
    epoch_time[k] = secs[secs.size() / 2];
    log(ctx) << names[k] << ": " << model.num_model_nodes() << " nodes, " << fmt(epoch_time[k], 4) << " s/epoch\n";
    csv << names[k] << "_epoch_seconds," << epoch_time[k] << "\n";
  }
  const double epoch_ratio = epoch_time[1] / epoch_time[0];
  csv << "multiscale_epoch_ratio," << epoch_ratio << "\n";
  log(ctx) << "multiscale/full epoch-time ratio " << fmt(epoch_ratio, 4) << "\n";

  // Physics-attention forward time against node count.
  transolver::TransolverConfig tc;
  tc.num_slices = b["transolver_slices"].get<std::size_t>();
  tc.hidden_dim = b["transolver_hidden"].get<std::size_t>();
  tc.num_heads = b["transolver_heads"].get<std::size_t>();
  tc.num_layers = 1;
  transolver::TransolverModel net(tc, c["seed"].get<std::uint64_t>());
  const auto sizes = b["transolver_nodes"].get<std::vector<std::size_t>>();
  const auto repeats = std::max<std::size_t>(1, b["repeats"].get<std::size_t>());
  std::vector<double> times;
  Rng rng(1);
  for (std::size_t n : sizes) {
    diff::Tensor x = diff::Tensor::zeros(n, tc.hidden_dim);
    for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
    std::vector<double> runs;
    for (std::size_t r = 0; r <= repeats; ++r) {
      diff::Tape tape;
      diff::Var xv = tape.constant(x);
      const auto t0 = std::chrono::steady_clock::now();
      net.physics_attention(tape, xv, net.block(0));
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (r > 0) runs.push_back(s);
    }
    std::sort(runs.begin(), runs.end());
    times.push_back(runs[runs.size() / 2]);
    log(ctx) << "physics attention N=" << n << " M=" << tc.num_slices << ": " << fmt(times.back() * 1e3, 4)
             << " ms\n";
    csv << "physics_attention_seconds_n" << n << "," << times.back() << "\n";
  }
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    const double ratio = times[i] / times[i - 1];
    csv << "physics_attention_ratio_n" << sizes[i] << "_n" << sizes[i - 1] << "," << ratio << "\n";
    log(ctx) << "time(" << sizes[i] << ")/time(" << sizes[i - 1] << ") = " << fmt(ratio, 4) << "\n";
  }
  if (!csv) throw DataError("cannot write bench.csv");
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crash-dynamics surrogate models: data generation, training, evaluation."};
  app.require_subcommand(1);
  std::optional<std::string> config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_dir, data_dir, model_kind, scheme;
  std::vector<std::string> checkpoints;
  std::optional<std::size_t> samples;
  bool force = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON configuration file");
    sub->add_option("--set", sets, "override a config key: key.path=value")->take_all();
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--force", force, "replace a non-empty output directory");
    sub->add_option("--workers", workers, "worker threads");
  };
  auto* gen = app.add_subcommand("gen-data", "simulate the crash oracle and write a dataset");
  common(gen);
  gen->add_option("--samples", samples, "number of design samples");
  auto* trn = app.add_subcommand("train", "train a model on a dataset");
  common(trn);
  trn->add_option("--data", data_dir, "dataset directory")->required();
  trn->add_option("--model", model_kind, "transolver | mgn | mgn-multiscale");
  trn->add_option("--scheme", scheme, "tc | ar-ot | ar-rt");
  auto* evl = app.add_subcommand("eval", "evaluate checkpoints on a dataset split");
  common(evl);
  evl->add_option("--data", data_dir, "dataset directory")->required();
  evl->add_option("--checkpoint", checkpoints, "checkpoint directory (repeatable)")->required();
  auto* bch = app.add_subcommand("bench", "time multiscale vs full MGN and Transolver scaling");
  common(bch);
  bch->add_option("--data", data_dir, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    std::vector<std::string> assignments = sets;
    if (seed) assignments.push_back("seed=" + std::to_string(*seed));
    if (workers) assignments.push_back("workers=" + std::to_string(*workers));
    if (samples) assignments.push_back("doe.num_samples=" + std::to_string(*samples));
    if (!model_kind.empty()) assignments.push_back("model.kind=\"" + model_kind + "\"");
    if (!scheme.empty()) assignments.push_back("training.scheme=\"" + scheme + "\"");
    CommandContext ctx;
    ctx.config =
        load_config(config_file ? std::optional<fs::path>(*config_file) : std::nullopt, assignments);
    ctx.out = out_dir;
    ctx.data = data_dir;
    for (const auto& c : checkpoints) ctx.checkpoints.emplace_back(c);
    ctx.force = force;
    ctx.log = &out;
    if (fs::path(data_dir).lexically_normal() == fs::path(out_dir).lexically_normal() && !data_dir.empty()) {
      throw ConfigError("--out must differ from --data");
    }
    if (gen->parsed()) cmd_gen_data(ctx);
    if (trn->parsed()) cmd_train(ctx);
    if (evl->parsed()) cmd_eval(ctx);
    if (bch->parsed()) cmd_bench(ctx);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const IndexError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const Json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace crash::cli
