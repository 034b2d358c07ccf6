// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "crash/experiment.hpp"

namespace {

using namespace crash;
using diff::Tape;
using diff::Tensor;

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(r, c);
  for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

const datagen::Dataset& bench_dataset() {
  static const datagen::Dataset ds = [] {
    datagen::GenerateOptions opt;
    opt.num_samples = 10;
    return datagen::generate_dataset(datagen::CrashScenario{}, opt);
  }();
  return ds;
}

void BM_PhysicsAttention(benchmark::State& state) {
  transolver::TransolverConfig c;
  c.num_slices = 128;
  c.hidden_dim = 64;
  c.num_heads = 8;
  c.num_layers = 1;
  const transolver::TransolverModel net(c, 1);
  const Tensor x = random_tensor(std::size_t(state.range(0)), c.hidden_dim, 2);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(net.physics_attention(tape, tape.constant(x), net.block(0)).value().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PhysicsAttention)->RangeMultiplier(2)->Range(2500, 20000)->Complexity()->Unit(benchmark::kMillisecond);

void BM_ItemLossWithGrad(benchmark::State& state) {
  const auto kind = static_cast<transient::ModelKind>(state.range(0));
  const auto scheme = static_cast<transient::Scheme>(state.range(1));
  const auto& ds = bench_dataset();
  const transient::Surrogate model(experiment::desk_model_spec(kind, scheme), ds.mesh,
                                   transient::PhysicalContext::from_dataset(ds));
  const auto cfg = experiment::desk_scheme_config(scheme);
  for (auto _ : state) {
    auto sink = model.params().make_sink();
    benchmark::DoNotOptimize(transient::item_loss(model, ds, cfg, {0, 0}, &sink));
  }
  state.SetLabel(experiment::run_label(model.spec()));
}
BENCHMARK(BM_ItemLossWithGrad)
    ->ArgsProduct({{int(transient::ModelKind::transolver), int(transient::ModelKind::mgn),
                    int(transient::ModelKind::mgn_multiscale)},
                   {int(transient::Scheme::ar_ot), int(transient::Scheme::ar_rt)}})
    ->Unit(benchmark::kMillisecond);

void BM_SimulateCrash(benchmark::State& state) {
  const datagen::CrashScenario s;
  const auto mesh = datagen::build_sheet_mesh(s.nx, s.ny, s.spacing, s.num_components);
  const auto design = datagen::sample_doe(1, s.num_components, s.nominal_thickness, 0).front();
  for (auto _ : state) benchmark::DoNotOptimize(datagen::simulate_crash(mesh, design, s).audit.final_kinetic);
}
BENCHMARK(BM_SimulateCrash)->Unit(benchmark::kMillisecond);

void BM_FarthestPointSampling(benchmark::State& state) {
  const auto points = bench_dataset().mesh.positions;
  const std::size_t start = geometry::lexicographic_min(points);
  for (auto _ : state) benchmark::DoNotOptimize(geometry::farthest_point_sampling(points, 44, start).data());
}
BENCHMARK(BM_FarthestPointSampling);

void BM_KnnEdges(benchmark::State& state) {
  const auto points = bench_dataset().mesh.positions;
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (auto _ : state) benchmark::DoNotOptimize(geometry::knn_edges(points, all, all, 6).data());
}
BENCHMARK(BM_KnnEdges);

void BM_BuildMultiscaleGraph(benchmark::State& state) {
  const auto& mesh = bench_dataset().mesh;
  for (auto _ : state) benchmark::DoNotOptimize(geometry::build_multiscale_graph(mesh, {}).num_sampled());
}
BENCHMARK(BM_BuildMultiscaleGraph);

}  // namespace

BENCHMARK_MAIN();
