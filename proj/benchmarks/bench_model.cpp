#include <random>

#include <benchmark/benchmark.h>

#include "bctrace/explain.hpp"
#include "bctrace/model.hpp"

using namespace bctrace;

namespace {

model::Dataset table(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  model::Dataset d;
  for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("f" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(cols);
    for (auto& v : x) v = u(rng);
    d.push_row(x, 3 * x[0] + std::sin(4 * x[1]) + x[2] * x[3]);
  }
  return d;
}

void BM_FitGbt(benchmark::State& state) {
  const auto d = table(static_cast<std::size_t>(state.range(0)), 12);
  model::GbtHyperParams p;
  p.n_estimators = 200;
  p.learning_rate = 0.05;
  p.max_depth = 3;
  for (auto _ : state) benchmark::DoNotOptimize(model::fit_gbt(d, p));
}
BENCHMARK(BM_FitGbt)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FitForest(benchmark::State& state) {
  const auto d = table(1000, 12);
  for (auto _ : state) benchmark::DoNotOptimize(model::fit_forest(d, model::ForestParams{50, 8, 2, true}, 1));
}
BENCHMARK(BM_FitForest)->Unit(benchmark::kMillisecond);

void BM_ShapleyRow(benchmark::State& state) {
  const auto cols = static_cast<std::size_t>(state.range(0));
  const auto d = table(300, cols);
  model::GbtHyperParams p;
  p.n_estimators = 100;
  p.max_depth = 3;
  const model::Model m{model::fit_gbt(d, p)};
  const auto bg = explain::select_background(d, 100, 1);
  const auto method = state.range(1) ? explain::ShapMethod::kEnumeration : explain::ShapMethod::kAuto;
  for (auto _ : state) benchmark::DoNotOptimize(explain::shapley_exact(m, d.row(0), bg, 0, method));
}
BENCHMARK(BM_ShapleyRow)->Args({8, 0})->Args({12, 0})->Args({8, 1})->Unit(benchmark::kMillisecond);

}  // namespace
