#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "bctrace/vision.hpp"

using namespace bctrace;
using namespace bctrace::vision;

namespace {

GrayImage road(int w, int h) {
  GrayImage img(w, h, 90);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 6);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool mark = y % 60 < 3;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround((mark ? 230 : 90) + g(rng)), 0L, 255L));
    }
  }
  return img;
}

void BM_Canny(benchmark::State& state) {
  const auto img = road(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4);
  for (auto _ : state) benchmark::DoNotOptimize(canny(img, 40, 100));
}
BENCHMARK(BM_Canny)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Hough(benchmark::State& state) {
  const auto edges = canny(road(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) * 3 / 4), 40, 100);
  for (auto _ : state) benchmark::DoNotOptimize(hough_lines(edges, 1.0, M_PI / 180, 150));
}
BENCHMARK(BM_Hough)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

}  // namespace
