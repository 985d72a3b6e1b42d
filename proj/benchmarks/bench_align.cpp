#include <random>

#include <benchmark/benchmark.h>

#include "bctrace/align.hpp"
#include "bctrace/synth.hpp"

using namespace bctrace;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

void BM_Dft(benchmark::State& state) {
  const auto x = noise(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(align::dft(x));
}
// Powers of two and a prime length (Bluestein path).
BENCHMARK(BM_Dft)->Arg(1024)->Arg(4096)->Arg(4093)->Arg(65536);

void BM_CircularSimilarity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = noise(n, 2);
  const auto y = noise(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(align::circular_similarity(x, y));
}
BENCHMARK(BM_CircularSimilarity)->Arg(4096)->Arg(21600);

void BM_FindOptimalShift(benchmark::State& state) {
  const auto p = synth::make_lag_pair(7, 160, 10.0, state.range(0));
  const auto cfg = align::ShiftSearchConfig::symmetric(600);
  for (auto _ : state) benchmark::DoNotOptimize(align::find_optimal_shift(p.bc, p.activity, cfg));
}
BENCHMARK(BM_FindOptimalShift)->Arg(3600)->Arg(21600)->Unit(benchmark::kMillisecond);

}  // namespace
