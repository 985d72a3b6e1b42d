#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "bctrace/error.hpp"
#include "bctrace/features.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::features;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

BcSeries flat_series(UnixSeconds start, std::size_t n, double v) {
  BcSeries s;
  s.start = start;
  s.values.assign(n, v);
  s.atn.assign(n, 0.0);
  return s;
}

vision::CountReport one_bin(UnixSeconds t) {
  vision::CountReport c;
  c.lane_count = 3;
  c.bins.push_back({t, 7, {1, 2, 3}, {0, 1, 0}, {0, 0, 0}, {0, 0, 0}});
  return c;
}

double pearson_direct(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (n * sab - sa * sb) / std::sqrt((n * saa - sa * sa) * (n * sbb - sb * sb));
}

model::Dataset random_table(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  model::Dataset d;
  for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("f" + std::to_string(c));
  std::vector<double> base(3);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& b : base) b = g(rng);
    std::vector<double> x(cols);
    // Columns share a few latent factors so strong correlations occur.
    for (std::size_t c = 0; c < cols; ++c) x[c] = base[c % 3] + (0.2 + 0.3 * static_cast<double>(c % 4)) * g(rng);
    d.push_row(x, base[0] + 0.5 * base[1] + g(rng));
  }
  return d;
}

}  // namespace

TEST(Join, ReproducesSampleRow) {
  const auto expect = parse_feature_rows(oracle::slurp(oracle::data_path("dataset_row.json"))).at(0);
  const UnixSeconds t = expect.timestamp;
  const std::vector<WeatherSample> weather{
      {t - 120, 19.1, 24.5, 67, WeatherKind::kHistorical},
      {t - 600, 25.0, 3.0, 40, WeatherKind::kHistorical},
      {t, 18.7, 9.9, 68, WeatherKind::kForecast},
  };
  const std::vector<TrafficDensitySample> traffic{{t + 10, 0.65}, {t + 500, 0.1}};
  const auto post = flat_series(t - 30, 3, 1114);
  const auto raw = flat_series(t - 30, 3, 1202);
  const auto table = build_feature_table(one_bin(t), weather, traffic, post, &raw, expect.dataset, JoinConfig{});
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0], expect);
}

TEST(Join, WeatherComesFromTwoMinutesBefore) {
  const UnixSeconds t = 1730800000;
  std::vector<WeatherSample> weather;
  for (UnixSeconds s = t - 1200; s <= t + 600; s += 60) {
    weather.push_back({s, static_cast<double>(s - t), 1.0, 50.0, WeatherKind::kHistorical});
  }
  const auto post = flat_series(t, 1, 900);
  const auto r = build_feature_table(one_bin(t), weather, {}, post, nullptr, "d", JoinConfig{});
  EXPECT_EQ(r.rows.at(0).his_temp, -120.0);
  EXPECT_FALSE(r.rows[0].traffic.has_value());
  EXPECT_FALSE(r.rows[0].forecast.has_value());
}

TEST(Join, EquidistantSamplesTieToTheEarlier) {
  const UnixSeconds t = 1730800000;
  const std::vector<WeatherSample> weather{{t - 90, 2.0, 1.0, 50.0, WeatherKind::kHistorical},
                                           {t - 150, 1.0, 1.0, 50.0, WeatherKind::kHistorical}};
  const auto r = build_feature_table(one_bin(t), weather, {}, flat_series(t, 1, 900), nullptr, "d", JoinConfig{});
  EXPECT_EQ(r.rows.at(0).his_temp, 1.0);
}

TEST(Join, NoWeatherCoverage) {
  const UnixSeconds t = 1730800000;
  const std::vector<WeatherSample> far{{t - 5000, 1.0, 1.0, 50.0, WeatherKind::kHistorical}};
  EXPECT_EQ(code_of([&] { build_feature_table(one_bin(t), far, {}, flat_series(t, 1, 1), nullptr, "d", JoinConfig{}); }),
            ErrorCode::kNoWeatherCoverage);
  const std::vector<WeatherSample> only_forecast{{t - 120, 1.0, 1.0, 50.0, WeatherKind::kForecast}};
  EXPECT_EQ(code_of([&] {
              build_feature_table(one_bin(t), only_forecast, {}, flat_series(t, 1, 1), nullptr, "d", JoinConfig{});
            }),
            ErrorCode::kNoWeatherCoverage);
}

TEST(Join, BinsWithoutTargetAreDropped) {
  const UnixSeconds t = 1730800000;
  vision::CountReport c = one_bin(t);
  c.bins.push_back(c.bins[0]);
  c.bins[1].bin_start = t + 30;
  auto post = flat_series(t, 2, 500);
  post.values[1] = kMissing;
  const std::vector<WeatherSample> w{{t - 120, 1.0, 1.0, 50.0, WeatherKind::kHistorical}};
  const auto r = build_feature_table(c, w, {}, post, nullptr, "d", JoinConfig{});
  EXPECT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.dropped_no_target, (std::vector<UnixSeconds>{t + 30}));
}

TEST(Names, DefaultSetAndLookup) {
  const auto names = default_feature_names(2, true);
  EXPECT_EQ(names, (std::vector<std::string>{"TotalVehicle", "LDPV_1", "LDPV_2", "HDV_1", "HDV_2", "StopLDPV_1",
                                             "StopLDPV_2", "StopHDV_1", "StopHDV_2", "his_temp", "his_wind",
                                             "his_humid", "traffic"}));
  FeatureRow row;
  row.ldpv = {4, 5};
  row.hdv = {1, 2};
  row.stop_ldpv = {0, 3};
  row.stop_hdv = {6, 0};
  EXPECT_EQ(feature_value(row, "LDPV_2"), 5);
  EXPECT_EQ(feature_value(row, "StopLDPV_2"), 3);
  EXPECT_EQ(feature_value(row, "StopHDV_1"), 6);
  EXPECT_TRUE(std::isnan(feature_value(row, "traffic")));
  EXPECT_EQ(code_of([&] { feature_value(row, "LDPV_3"); }), ErrorCode::kMissingKey);
  EXPECT_EQ(code_of([&] { feature_value(row, "speed"); }), ErrorCode::kMissingKey);
}

TEST(Names, ToDatasetNeedsTargets) {
  FeatureRow row;
  row.ldpv = {1};
  row.hdv = {0};
  row.stop_ldpv = {0};
  row.stop_hdv = {0};
  row.bc_raw = 10.0;
  const std::vector<FeatureRow> rows{row};
  const auto names = default_feature_names(1, false);
  EXPECT_EQ(to_dataset(rows, names, TargetKind::kRaw).y, (std::vector<double>{10.0}));
  EXPECT_EQ(code_of([&] { to_dataset(rows, names, TargetKind::kPost); }), ErrorCode::kBadParams);
}

TEST(Correlation, PerfectLinearRelations) {
  model::Dataset d;
  d.feature_names = {"a", "b", "c"};
  for (int i = 0; i < 10; ++i) d.push_row(std::vector<double>{double(i), 3.0 * i - 2, -0.5 * i}, i * i);
  const auto rep = correlation_matrix(d);
  EXPECT_NEAR(rep.r(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(rep.r(0, 2), -1.0, 1e-12);
  EXPECT_EQ(rep.r(1, 1), 1.0);
}

TEST(Correlation, ConstantColumnHasZeroCorrelation) {
  model::Dataset d;
  d.feature_names = {"a", "k"};
  for (int i = 0; i < 6; ++i) d.push_row(std::vector<double>{double(i % 3), 4.0}, i);
  const auto rep = correlation_matrix(d);
  EXPECT_EQ(rep.r(0, 1), 0.0);
  EXPECT_EQ(rep.constant, (std::vector<std::string>{"k"}));
}

TEST(Correlation, TooFewRows) {
  model::Dataset d;
  d.feature_names = {"a"};
  d.push_row(std::vector<double>{1.0}, 1.0);
  d.push_row(std::vector<double>{2.0}, 1.0);
  EXPECT_EQ(code_of([&] { correlation_matrix(d); }), ErrorCode::kTooFewRows);
}

TEST(Correlation, RandomTablesMatchRawSumFormula) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 20; ++trial) {
    model::Dataset d;
    for (int c = 0; c < 6; ++c) d.feature_names.push_back("x" + std::to_string(c));
    for (int r = 0; r < 10; ++r) {
      std::vector<double> x(6);
      for (auto& v : x) v = u(rng);
      d.push_row(x, u(rng));
    }
    const auto rep = correlation_matrix(d);
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        const double expect = i == j ? 1.0 : pearson_direct(d.column(i), d.column(j));
        EXPECT_NEAR(rep.r(i, j), expect, 1e-12);
      }
      EXPECT_NEAR(rep.target_r[i], pearson_direct(d.column(i), d.y), 1e-12);
    }
  }
}

TEST(Correlation, PairwiseCompleteRows) {
  model::Dataset d;
  d.feature_names = {"a", "b"};
  const double nan = kMissing;
  for (const auto& [a, b] : {std::pair{1.0, 2.0}, {2.0, 4.0}, {3.0, nan}, {4.0, 8.0}, {nan, 1.0}, {5.0, 10.0}}) {
    d.push_row(std::vector<double>{a, b}, 0.0);
  }
  EXPECT_NEAR(correlation_matrix(d).r(0, 1), 1.0, 1e-12);
}

TEST(Filter, DropsTheMemberWeakerAgainstTheTarget) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  model::Dataset d;
  d.feature_names = {"a", "a_copy", "other"};
  for (int i = 0; i < 300; ++i) {
    const double a = g(rng), o = g(rng);
    d.push_row(std::vector<double>{a, a + 0.1 * g(rng), o}, a + 0.3 * o + 0.2 * g(rng));
  }
  const auto r = filter_correlated(d, 0.70);
  ASSERT_EQ(r.report.dropped.size(), 1u);
  const auto& drop = r.report.dropped[0];
  const bool copy_weaker = std::abs(r.report.target_r[1]) < std::abs(r.report.target_r[0]);
  EXPECT_EQ(drop.feature, copy_weaker ? "a_copy" : "a");
  EXPECT_EQ(drop.kept_partner, copy_weaker ? "a" : "a_copy");
  EXPECT_EQ(r.table.cols(), 2u);
  EXPECT_EQ(r.table.feature_names.back(), "other");
}

TEST(Filter, RestoresFeaturesWhoseConflictWasDropped) {
  // r(a,b) ~ 0.89 and r(b,c) ~ 0.45 while a and c are unrelated; the target
  // favours c over b over a. Dropping a then b leaves a free to return.
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0, 1);
  model::Dataset d;
  d.feature_names = {"a", "b", "c"};
  for (int i = 0; i < 4000; ++i) {
    const double z1 = g(rng), z2 = g(rng);
    d.push_row(std::vector<double>{z1, (2 * z1 + z2) / std::sqrt(5.0), z2}, z2 + 0.3 * z1);
  }
  const auto r = filter_correlated(d, 0.40);
  EXPECT_EQ(r.table.feature_names, (std::vector<std::string>{"a", "c"}));
  ASSERT_EQ(r.report.dropped.size(), 1u);
  EXPECT_EQ(r.report.dropped[0].feature, "b");
  EXPECT_EQ(r.report.dropped[0].kept_partner, "a");
}

TEST(Filter, KeptSetIsConflictFreeAndMaximal) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_table(rng, 60, 9);
    const double thr = 0.5 + 0.03 * (trial % 10);
    const auto r = filter_correlated(d, thr);
    const auto& rep = r.report;
    std::vector<std::size_t> kept;
    for (const auto& n : r.table.feature_names) {
      kept.push_back(static_cast<std::size_t>(std::find(rep.names.begin(), rep.names.end(), n) - rep.names.begin()));
    }
    EXPECT_TRUE(std::is_sorted(kept.begin(), kept.end()));
    for (auto i : kept) {
      for (auto j : kept) {
        if (i != j) {
          EXPECT_LE(std::abs(rep.r(i, j)), thr);
        }
      }
    }
    for (std::size_t c = 0; c < rep.names.size(); ++c) {
      if (std::find(kept.begin(), kept.end(), c) != kept.end()) continue;
      bool conflict = false;
      for (auto k : kept) conflict = conflict || std::abs(rep.r(c, k)) > thr;
      EXPECT_TRUE(conflict) << rep.names[c] << " could be kept";
    }
    EXPECT_EQ(kept.size() + rep.dropped.size(), rep.names.size());
    // Kept columns are copied verbatim.
    for (std::size_t row = 0; row < d.rows(); ++row) {
      for (std::size_t c = 0; c < kept.size(); ++c) EXPECT_EQ(r.table.at(row, c), d.at(row, kept[c]));
    }
  }
}

TEST(Filter, CsvHasHeaderAndOneRowPerFeature) {
  model::Dataset d;
  d.feature_names = {"a", "b"};
  for (int i = 0; i < 5; ++i) d.push_row(std::vector<double>{double(i), double(i % 2)}, i);
  const auto csv = correlation_csv(correlation_matrix(d));
  EXPECT_EQ(csv.rfind("feature,a,b,target\na,1,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
