// Serial reference loops against their OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include <benchmark/benchmark.h>

#include "demand/backtest.hpp"
#include "demand/explain.hpp"
#include "demand/models.hpp"
#include "support.hpp"

using namespace demand;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel x" + std::to_string(worker_count()));
}

const FeatureMatrix& training_rows() {
  static const FeatureMatrix X = fixture::random_matrix(2000, 1, 10.0);
  return X;
}

void BM_ForestFit(benchmark::State& state) {
  auto p = TreeEnsembleParams::forest_defaults();
  p.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(forest_fit(training_rows(), p, mode(state)));
  label(state);
}

void BM_Shapley(benchmark::State& state) {
  auto p = TreeEnsembleParams::forest_defaults();
  p.n_trees = 50;
  static const auto forest = forest_fit(training_rows(), p);
  static const auto bg = sample_background(training_rows(), 64, 1);
  const FeatureRow& row = training_rows()[17];
  for (auto _ : state) benchmark::DoNotOptimize(shapley_exact(*forest, row, bg, mode(state)));
  label(state);
}

void BM_PermutationImportance(benchmark::State& state) {
  auto p = TreeEnsembleParams::forest_defaults();
  p.n_trees = 50;
  static const auto forest = forest_fit(training_rows(), p);
  for (auto _ : state)
    benchmark::DoNotOptimize(permutation_importance(*forest, training_rows(), 5, 3, mode(state)));
  label(state);
}

void BM_BacktestGrid(benchmark::State& state) {
  static const SynthResult s = fixture::small_synth(make_date(2018, 12, 31), 2);
  const auto schedule = make_schedule(make_date(2017, 12, 31), make_date(2018, 12, 31));
  auto fp = TreeEnsembleParams::forest_defaults();
  fp.n_trees = 30;
  const std::vector<ModelPtr> models{std::make_shared<InHouseModel>(), std::make_shared<RidgeModel>(),
                                     std::make_shared<ForestModel>("forest", fp)};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        run_backtest(models, s.series, s.holidays, s.covid, schedule, {}, mode(state)));
  label(state);
}

}  // namespace

BENCHMARK(BM_ForestFit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Shapley)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PermutationImportance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BacktestGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
