#include <benchmark/benchmark.h>

#include <random>

#include "fairlime/blackbox.hpp"
#include "fairlime/parallel.hpp"

using namespace fairlime;

namespace {

Matrix samples(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, 0) = i % 4 == 0 ? 0.0 : 1.0;
    m(i, 1) = normal(rng);
    m(i, 2) = 5.5 + 2.0 * normal(rng);
  }
  return m;
}

Mlp3Model mlp() {
  TabularDataset ds;
  ds.feature_names = {"g", "x0", "x1"};
  ds.feature_kinds = {FeatureKind::binary, FeatureKind::continuous, FeatureKind::continuous};
  ds.rows = samples(256);
  TrainConfig cfg;
  cfg.hidden1 = 32;
  cfg.hidden2 = 16;
  return init_mlp(ds, cfg);
}

void score_mlp(benchmark::State& state, Execution exec) {
  const Matrix x = samples(static_cast<std::size_t>(state.range(0)));
  const BlackBoxModel model(mlp());
  std::vector<double> out(x.rows());
  for (auto _ : state) {
    score_rows(model, x, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void weights(benchmark::State& state, Execution exec) {
  const Matrix x = samples(static_cast<std::size_t>(state.range(0)));
  const std::vector<double> center = {1.0, 0.0, 5.5};
  const std::vector<double> scale = {0.45, 1.2, 2.3};
  std::vector<double> out(x.rows());
  for (auto _ : state) {
    kernel_weights(x, center, scale, 1.3, out, exec);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ScoreRowsSerial(benchmark::State& s) { score_mlp(s, Execution::serial); }
void BM_ScoreRowsParallel(benchmark::State& s) { score_mlp(s, Execution::parallel); }
void BM_KernelWeightsSerial(benchmark::State& s) { weights(s, Execution::serial); }
void BM_KernelWeightsParallel(benchmark::State& s) { weights(s, Execution::parallel); }

}  // namespace

BENCHMARK(BM_ScoreRowsSerial)->Arg(1000)->Arg(5000)->Arg(20000);
BENCHMARK(BM_ScoreRowsParallel)->Arg(1000)->Arg(5000)->Arg(20000);
BENCHMARK(BM_KernelWeightsSerial)->Arg(1000)->Arg(5000)->Arg(20000);
BENCHMARK(BM_KernelWeightsParallel)->Arg(1000)->Arg(5000)->Arg(20000);

BENCHMARK_MAIN();
