#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "bctrace/align.hpp"
#include "bctrace/error.hpp"
#include "bctrace/synth.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::align;

namespace {

std::vector<double> noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// x[n] = y[n - d], wrapping.
std::vector<double> delayed(const std::vector<double>& y, std::int64_t d) {
  const auto n = static_cast<std::int64_t>(y.size());
  std::vector<double> x(y.size());
  for (std::int64_t t = 0; t < n; ++t) x[static_cast<std::size_t>(t)] = y[static_cast<std::size_t>(((t - d) % n + n) % n)];
  return x;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

}  // namespace

TEST(Dft, ConstantIsDcOnly) {
  const std::vector<double> c(48, 2.5);
  const auto s = dft(c);
  EXPECT_NEAR(s.cos_part[0], 2.5 * 48, 1e-9);
  for (std::size_t k = 1; k < s.size(); ++k) {
    EXPECT_NEAR(s.cos_part[k], 0.0, 1e-9);
    EXPECT_NEAR(s.sin_part[k], 0.0, 1e-9);
  }
  EXPECT_NEAR(s.sin_part[0], 0.0, 1e-9);
}

TEST(Dft, CosineAtBinOne) {
  for (std::size_t n : {16u, 30u, 97u}) {
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2.0 * oracle::kPi * static_cast<double>(t) / static_cast<double>(n));
    const auto s = dft(x);
    for (std::size_t k = 0; k < n; ++k) {
      const double e = std::hypot(s.cos_part[k], s.sin_part[k]);
      if (k == 1 || k == n - 1) {
        EXPECT_NEAR(e, static_cast<double>(n) / 2.0, 1e-9);
      } else {
        EXPECT_NEAR(e, 0.0, 1e-9) << "n " << n << " k " << k;
      }
    }
  }
}

TEST(Dft, MatchesDirectSummation) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {64u, 1u, 2u, 3u, 63u, 100u, 257u}) {
    const auto x = noise(rng, n);
    const auto s = dft(x);
    const auto o = oracle::naive_dft(x);
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_NEAR(s.cos_part[k], o.re[k], 1e-9) << n;
      EXPECT_NEAR(s.sin_part[k], o.im[k], 1e-9) << n;
    }
  }
}

TEST(Dft, InverseRoundTrip) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {128u, 1000u}) {
    const auto x = noise(rng, n);
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft(a, false);
    fft(a, true);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i].real() / static_cast<double>(n), x[i], 1e-9);
  }
}

TEST(Similarity, SelfAndAntipodal) {
  std::mt19937_64 rng(3);
  const auto x = noise(rng, 200);
  std::vector<double> neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  EXPECT_NEAR(phase_cosine_similarity(dft(x), dft(x)), 1.0, 1e-12);
  EXPECT_NEAR(phase_cosine_similarity(dft(x), dft(neg)), -1.0, 1e-12);
}

TEST(Similarity, ZeroSpectrum) {
  const std::vector<double> z(16, 0.0), x{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  EXPECT_EQ(code_of([&] { phase_cosine_similarity(dft(z), dft(x)); }), ErrorCode::kZeroNorm);
}

TEST(Similarity, EqualsTimeDomainInnerProduct) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + static_cast<std::size_t>(trial) * 37;
    const auto x = noise(rng, n);
    const auto y = noise(rng, n);
    EXPECT_NEAR(phase_cosine_similarity(dft(x), dft(y)), oracle::circular_cosine(x, y, 0), 1e-9);
    const auto curve = circular_similarity(x, y);
    for (std::size_t d = 0; d < n; d += 7) {
      EXPECT_NEAR(curve[d], oracle::circular_cosine(x, y, static_cast<std::int64_t>(d)), 1e-9);
      // The curve value at d is also the similarity of x with y delayed by d.
      const auto yd = delayed(y, static_cast<std::int64_t>(d));
      EXPECT_NEAR(curve[d], phase_cosine_similarity(dft(x), dft(yd)), 1e-9);
    }
  }
}

TEST(Shift, PlantedCircularDelay) {
  std::mt19937_64 rng(5);
  const auto y = noise(rng, 3600);
  const auto x = delayed(y, 160);
  const auto cfg = ShiftSearchConfig::symmetric(600);
  const auto r = search_shift(x, y, cfg.candidate_shifts);
  EXPECT_EQ(r.optimal_shift, 160);
  EXPECT_NEAR(r.max_similarity, 1.0, 1e-9);
  EXPECT_EQ(search_shift(y, y, cfg.candidate_shifts).optimal_shift, 0);
}

TEST(Shift, GridSeriesWithPlantedLag) {
  std::mt19937_64 rng(6);
  std::poisson_distribution<int> c(8.0);
  GridSeries act{0, 30, {}};
  for (int i = 0; i < 240; ++i) act.values.push_back(c(rng));
  GridSeries bc = act;
  bc.start = 160;
  const auto r = find_optimal_shift(bc, act, ShiftSearchConfig::symmetric(600));
  EXPECT_EQ(r.optimal_shift, 160);
  EXPECT_EQ(find_optimal_shift(act, act, ShiftSearchConfig::symmetric(600)).optimal_shift, 0);
  ASSERT_EQ(r.similarity_curve.size(), 1201u);
  EXPECT_EQ(r.similarity_curve.front().first, -600);
}

TEST(Shift, NoisyLagsAgreeWithCrossCorrelationOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> lag(-300, 300);
  int exact = 0;
  const int trials = 25;
  for (int t = 0; t < trials; ++t) {
    const auto planted = lag(rng);
    const auto p = synth::make_lag_pair(1000 + static_cast<std::uint64_t>(t), planted, 10.0, 3600);
    const auto r = find_optimal_shift(p.bc, p.activity, ShiftSearchConfig::symmetric(300));
    exact += r.optimal_shift == planted;

    const UnixSeconds from = std::max(p.bc.start, p.activity.start);
    const UnixSeconds to = std::min(p.bc.end(), p.activity.end());
    const auto x = oracle::zscore(oracle::hold_per_second(p.bc.start, p.bc.step, p.bc.values, from, to));
    const auto y = oracle::zscore(
        oracle::hold_per_second(p.activity.start, p.activity.step, p.activity.values, from, to));
    EXPECT_EQ(r.optimal_shift, oracle::xcorr_argmax(x, y, 300)) << "trial " << t;
  }
  EXPECT_EQ(exact, trials);
}

TEST(Shift, InsufficientOverlap) {
  GridSeries a{0, 30, std::vector<double>(20, 1.0)};
  a.values[3] = 4;
  EXPECT_EQ(code_of([&] { find_optimal_shift(a, a, ShiftSearchConfig::symmetric(600)); }),
            ErrorCode::kInsufficientOverlap);
}

TEST(ApplyShift, ZeroIsIdentityAndLargeShiftFails) {
  BcSeries s;
  s.start = 1000;
  s.values = {1, 2, 3, 4};
  s.atn = {0, 0, 0, 0};
  const auto same = apply_shift(s, 0);
  EXPECT_EQ(same.start, s.start);
  EXPECT_EQ(same.values, s.values);
  const auto moved = apply_shift(s, 30);
  EXPECT_EQ(moved.start, 970);
  EXPECT_EQ(moved.values, s.values);
  EXPECT_EQ(code_of([&] { apply_shift(s, 120); }), ErrorCode::kShiftTooLarge);
  EXPECT_EQ(code_of([&] { apply_shift(s, -120); }), ErrorCode::kShiftTooLarge);
}

TEST(ApplyShift, RealignsBcWithActivity) {
  const auto p = synth::make_lag_pair(99, 160, 30.0);
  const auto back = apply_shift(p.bc, 160);
  EXPECT_EQ(back.start, p.activity.start);
  // After the shift the BC peaks sit on the count peaks.
  const auto r = find_optimal_shift(back, p.activity, ShiftSearchConfig::symmetric(300));
  EXPECT_EQ(r.optimal_shift, 0);
}

TEST(Curve, CsvHasOneRowPerCandidate) {
  AlignmentResult r;
  r.similarity_curve = {{-1, 0.5}, {0, 1.0}, {1, 0.5}};
  EXPECT_EQ(similarity_curve_csv(r), "shift_s,cosine_similarity\n-1,0.5\n0,1\n1,0.5\n");
}
