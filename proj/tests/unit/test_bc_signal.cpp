#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bctrace/bc_signal.hpp"
#include "bctrace/error.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::signal;

namespace {

BcSeries excerpt_series() {
  const auto rows = parse_ae51_csv(oracle::slurp(oracle::data_path("ae51_excerpt.csv")));
  return resample_to_grid(rows, 30);
}

BcSeries random_series(std::mt19937_64& rng, std::size_t n, double missing_rate) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BcSeries s;
  s.start = 1000;
  double atn = -3.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Occasional filter changes.
    atn = u(rng) < 0.02 ? -3.0 : atn + 0.004 * std::abs(g(rng));
    s.atn.push_back(atn);
    s.values.push_back(u(rng) < missing_rate ? kMissing : 900 + 400 * g(rng));
  }
  return s;
}

}  // namespace

TEST(Ona, ZeroDeltaIsIdentity) {
  std::mt19937_64 rng(1);
  const auto s = random_series(rng, 400, 0.1);
  const auto r = ona_filter(s, OnaConfig{0.0});
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_missing(s.values[i])) {
      EXPECT_TRUE(is_missing(r.series.values[i]));
      EXPECT_EQ(r.window_sizes[i], 0);
    } else {
      EXPECT_EQ(r.series.values[i], s.values[i]);
      EXPECT_EQ(r.window_sizes[i], 1);
    }
  }
}

TEST(Ona, ConstantSeriesIsUnchanged) {
  std::mt19937_64 rng(2);
  auto s = random_series(rng, 200, 0.0);
  std::fill(s.values.begin(), s.values.end(), 777.0);
  for (double d : {0.0, 0.001, 0.01, 0.05, 1.0}) {
    const auto r = ona_filter(s, OnaConfig{d});
    for (double v : r.series.values) EXPECT_EQ(v, 777.0);
  }
}

TEST(Ona, ExcerptWindowsMatchTheRecordedColumn) {
  const auto rows = parse_ae51_csv(oracle::slurp(oracle::data_path("ae51_excerpt.csv")));
  const auto s = excerpt_series();
  const auto r = ona_filter(s, OnaConfig{0.015});
  // Rows 2..4 form a closed window of three; row 5 opens a window the
  // excerpt cuts off.
  for (std::size_t i = 1; i <= 3; ++i) EXPECT_EQ(r.window_sizes[i], *rows[i].ona_pts);
  EXPECT_TRUE(r.trailing_window_open);
  EXPECT_EQ(r.window_sizes[4], 1);
  EXPECT_LE(r.window_sizes[4], *rows[4].ona_pts);
  EXPECT_EQ(r.window_sizes[0], 0);
  EXPECT_NEAR(r.series.values[1], (2379.0 + 1136.0 + 1099.0) / 3.0, 1e-9);
}

TEST(Ona, ExcerptWindowsAgreeWithDirectScan) {
  const auto s = excerpt_series();
  for (double d : {0.005, 0.0099, 0.01, 0.015, 0.0196, 0.02, 0.05}) {
    const auto r = ona_filter(s, OnaConfig{d});
    EXPECT_EQ(r.window_sizes, oracle::ona_window_sizes(s.atn, s.values, d)) << "delta " << d;
  }
}

TEST(Ona, OutputsAreWindowMeansAndVarianceShrinks) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_series(rng, 300, 0.05);
    const double delta = 0.002 + 0.002 * (trial % 10);
    const auto r = ona_filter(s, OnaConfig{delta});
    const auto sizes = oracle::ona_window_sizes(s.atn, s.values, delta);
    ASSERT_EQ(r.window_sizes, sizes);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!is_missing(s.values[i])) idx.push_back(i);
    }
    for (std::size_t a = 0; a < idx.size();) {
      const auto n = static_cast<std::size_t>(sizes[idx[a]]);
      double mean = 0.0;
      for (std::size_t j = a; j < a + n; ++j) mean += s.values[idx[j]];
      mean /= static_cast<double>(n);
      for (std::size_t j = a; j < a + n; ++j) EXPECT_NEAR(r.series.values[idx[j]], mean, 1e-12);
      a += n;
    }
    auto var = [&](const std::vector<double>& v) {
      double m = 0.0, ss = 0.0;
      for (auto i : idx) m += v[i];
      m /= static_cast<double>(idx.size());
      for (auto i : idx) ss += (v[i] - m) * (v[i] - m);
      return ss / static_cast<double>(idx.size());
    };
    EXPECT_LE(var(r.series.values), var(s.values) + 1e-9);
  }
}

TEST(Ona, MissingAtn) {
  BcSeries s;
  s.values = {1.0, 2.0};
  s.atn = {0.0, kMissing};
  try {
    ona_filter(s, OnaConfig{});
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAtn);
  }
}

TEST(Trim, CriticalValue) {
  EXPECT_DOUBLE_EQ(critical_z(0.95), 1.96);
  EXPECT_DOUBLE_EQ(critical_z(0.99), 2.58);
}

TEST(Trim, SetBBoundsRemoveTheRecordedMinimum) {
  const TrimBounds b{"Set_B", 100, 729.82, 260.0, 729.82 - 1.96 * 260.0, 729.82 + 1.96 * 260.0};
  EXPECT_NEAR(b.lower, 220.22, 1e-9);
  const std::vector<double> v{-242.0, 729.82, 1200.0};
  const std::vector<std::string> d(3, "Set_B");
  const auto r = trim_with_bounds(v, d, std::span(&b, 1), 0.95);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].value, -242.0);
}

TEST(Trim, IdenticalValuesKeepEverything) {
  const std::vector<double> v(20, 5.0);
  const auto r = trim_outliers(v, {}, TrimConfig{TrimMode::kGlobal, 0.95});
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.kept.size(), 20u);
}

TEST(Trim, LocalMatchesPerSetBruteForce) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    std::normal_distribution<double> a(500, 100), b(1500, 300);
    std::vector<double> v;
    std::vector<std::string> d;
    for (int i = 0; i < 120; ++i) {
      const bool first = i % 3 != 0;
      v.push_back(first ? a(rng) : b(rng));
      d.push_back(first ? "Set_A" : "Set_B");
    }
    const auto local = trim_outliers(v, d, TrimConfig{TrimMode::kLocal, 0.95});
    const auto global = trim_outliers(v, d, TrimConfig{TrimMode::kGlobal, 0.95});

    auto brute = [&](bool per_set) {
      std::vector<std::size_t> removed;
      for (std::size_t i = 0; i < v.size(); ++i) {
        double n = 0, sum = 0, ss = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (per_set && d[j] != d[i]) continue;
          n += 1;
          sum += v[j];
        }
        const double m = sum / n;
        for (std::size_t j = 0; j < v.size(); ++j) {
          if (per_set && d[j] != d[i]) continue;
          ss += (v[j] - m) * (v[j] - m);
        }
        const double sd = std::sqrt(ss / (n - 1));
        if (std::abs(v[i] - m) > 1.96 * sd) removed.push_back(i);
      }
      return removed;
    };
    auto indices = [](const TrimResult& r) {
      std::vector<std::size_t> out;
      for (const auto& x : r.removed) out.push_back(x.index);
      return out;
    };
    EXPECT_EQ(indices(local), brute(true));
    EXPECT_EQ(indices(global), brute(false));
    EXPECT_EQ(local.kept.size() + local.removed.size(), v.size());
  }
}

TEST(Trim, LocalEqualsGlobalOnOneSource) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(729.82, 260);
  std::vector<double> v;
  for (int i = 0; i < 500; ++i) v.push_back(g(rng));
  const std::vector<std::string> d(v.size(), "Set_B");
  const auto local = trim_outliers(v, d, TrimConfig{TrimMode::kLocal, 0.95});
  const auto global = trim_outliers(v, d, TrimConfig{TrimMode::kGlobal, 0.95});
  EXPECT_EQ(local.kept, global.kept);
  ASSERT_EQ(local.removed.size(), global.removed.size());
  ASSERT_EQ(local.bounds.size(), 1u);
  ASSERT_EQ(global.bounds.size(), 1u);
  EXPECT_EQ(local.bounds[0].lower, global.bounds[0].lower);
  EXPECT_EQ(local.bounds[0].upper, global.bounds[0].upper);
}

TEST(Trim, MissingValuesAreKeptAndIgnored) {
  std::vector<double> v{1, 2, 3, kMissing, 2, 1, 3};
  const auto r = trim_outliers(v, {}, TrimConfig{TrimMode::kGlobal, 0.95});
  EXPECT_EQ(r.kept.size(), 7u);
  EXPECT_EQ(r.bounds[0].n, 6u);
}

TEST(Trim, AuditCsvListsRemovedRows) {
  std::vector<double> v(50, 10.0);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += static_cast<double>(i % 5);
  v[17] = 1000.0;
  const auto r = trim_outliers(v, {}, TrimConfig{TrimMode::kGlobal, 0.95});
  const auto csv = removed_rows_csv(r);
  EXPECT_EQ(csv.rfind("index,dataset,value,lower,upper,reason\n", 0), 0u);
  EXPECT_NE(csv.find("\n17,"), std::string::npos);
}

TEST(Trim, SampleWithSetBStatistics) {
  // Free values standardized, then placed so the full sample, -242 included,
  // has mean 729.82 and sample sd 260.
  const double mu = 729.82, sigma = 260.0, x0 = -242.0;
  const std::size_t m = 400;
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> z(m);
  for (auto& x : z) x = g(rng);
  const double zm = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(m);
  double zss = 0.0;
  for (auto& x : z) {
    x -= zm;
    zss += x * x;
  }
  const double b = ((m + 1) * mu - x0) / static_cast<double>(m);
  const double rest = static_cast<double>(m) * sigma * sigma - (x0 - mu) * (x0 - mu) -
                      static_cast<double>(m) * (b - mu) * (b - mu);
  ASSERT_GT(rest, 0.0);
  const double a = std::sqrt(rest / zss);
  std::vector<double> v{x0};
  for (double x : z) v.push_back(b + a * x);
  const std::vector<std::string> d(v.size(), "Set_B");

  const auto r = trim_outliers(v, d, TrimConfig{TrimMode::kLocal, 0.95});
  ASSERT_EQ(r.bounds.size(), 1u);
  EXPECT_NEAR(r.bounds[0].mean, mu, 1e-9);
  EXPECT_NEAR(r.bounds[0].sd, sigma, 1e-9);
  EXPECT_NEAR(r.bounds[0].lower, mu - 1.96 * sigma, 1e-9);
  EXPECT_NEAR(r.bounds[0].upper, mu + 1.96 * sigma, 1e-9);
  ASSERT_FALSE(r.removed.empty());
  EXPECT_EQ(r.removed[0].index, 0u);
  EXPECT_EQ(r.removed[0].value, -242.0);
}
