#include <functional>

#include <gtest/gtest.h>

#include "bctrace/align.hpp"
#include "bctrace/error.hpp"
#include "bctrace/features.hpp"
#include "bctrace/synth.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::synth;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

ScenarioConfig short_config() {
  ScenarioConfig c;
  c.duration = 3600;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Scenario, SameSeedSameBytes) {
  const auto a = generate_scenario(short_config());
  const auto b = generate_scenario(short_config());
  EXPECT_EQ(manifest_json(a), manifest_json(b));
  EXPECT_EQ(serialize_ae51_csv(a.ae51), serialize_ae51_csv(b.ae51));
  EXPECT_EQ(serialize_event_log(a.events), serialize_event_log(b.events));
  auto other = short_config();
  other.seed = 4;
  EXPECT_NE(serialize_ae51_csv(generate_scenario(other).ae51), serialize_ae51_csv(a.ae51));
}

TEST(Scenario, CleanBcFollowsTheEmissionModel) {
  const auto s = generate_scenario(short_config());
  const auto& w = s.config.emission_weights;
  ASSERT_EQ(s.bc_clean.size(), s.true_counts.bins.size());
  for (std::size_t j = 0; j < s.bc_clean.size(); ++j) {
    const auto& b = s.true_counts.bins[j];
    double e = w.intercept;
    for (std::size_t l = 0; l < s.config.lane_count; ++l) {
      e += w.ldpv * b.ldpv[l] + w.hdv * b.hdv[l] + w.stop_ldpv * b.stop_ldpv[l] + w.stop_hdv * b.stop_hdv[l];
    }
    EXPECT_NEAR(s.bc_clean[j], e / (1.0 + s.config.wind_dilution * s.his_wind[j]), 1e-9);
  }
}

TEST(Scenario, WindSeenByBinsIsTheJoinedWeather) {
  const auto s = generate_scenario(short_config());
  BcSeries post;
  post.start = s.config.start;
  post.values.assign(s.true_counts.bins.size(), 1.0);
  post.atn.assign(post.values.size(), 0.0);
  const auto table = features::build_feature_table(s.true_counts, s.weather, s.traffic, post, nullptr, "x",
                                                    features::JoinConfig{});
  ASSERT_EQ(table.rows.size(), s.his_wind.size());
  for (std::size_t j = 0; j < table.rows.size(); ++j) EXPECT_EQ(table.rows[j].his_wind, s.his_wind[j]);
}

TEST(Scenario, NoiselessReadingsTrailByThePlantedLag) {
  auto c = short_config();
  c.noise_sigma = 0.0;
  c.planted_lag = 90;
  const auto s = generate_scenario(c);
  ASSERT_EQ(s.ae51.size(), s.bc_clean.size());
  EXPECT_FALSE(s.ae51[0].bc_raw.has_value());
  for (std::size_t j = 1; j < s.ae51.size(); ++j) {
    EXPECT_EQ(s.ae51[j].timestamp, s.true_counts.bins[j].bin_start + 90);
    EXPECT_EQ(*s.ae51[j].bc_raw, std::round(s.bc_clean[j]));
  }
}

TEST(Scenario, EventsMatchTrueFirstSeenCounts) {
  const auto s = generate_scenario(short_config());
  const auto& bins = s.true_counts.bins;
  const auto r = vision::bin_counts(
      s.events, vision::CountOptions{s.config.lane_count, 30, bins.front().bin_start, bins.back().bin_start + 30});
  ASSERT_EQ(r.bins.size(), bins.size());
  for (std::size_t j = 0; j < bins.size(); ++j) {
    EXPECT_EQ(r.bins[j].ldpv, bins[j].ldpv);
    EXPECT_EQ(r.bins[j].hdv, bins[j].hdv);
    EXPECT_EQ(r.bins[j].total_vehicle, bins[j].total_vehicle);
  }
  EXPECT_GT(r.excluded.at("person"), 0u);
}

TEST(Scenario, ZeroRateIsEmptyRoad) {
  auto c = short_config();
  c.arrival_rate = 0.0;
  c.pedestrian_rate = 0.0;
  c.noise_sigma = 0.0;
  const auto s = generate_scenario(c);
  EXPECT_TRUE(s.events.empty());
  EXPECT_TRUE(s.vehicles.empty());
  for (const auto& b : s.true_counts.bins) EXPECT_EQ(b.total_vehicle, 0);
  for (double v : s.bc_clean) EXPECT_EQ(v, 0.0);
}

TEST(Scenario, RenderedBackgroundYieldsTheTrueLanes) {
  for (std::size_t lanes : {1u, 2u, 3u}) {
    auto c = short_config();
    c.lane_count = lanes;
    const auto s = generate_scenario(c);
    const auto g = vision::detect_lanes(s.background, vision::LaneDetectionConfig{});
    ASSERT_EQ(g.lane_count(), lanes);
    for (std::size_t k = 0; k < g.boundaries.size(); ++k) {
      EXPECT_NEAR(g.boundaries[k].rho, s.lanes.boundaries[k].rho, 3.0);
    }
    // Every vehicle sits in its own lane at first sight.
    for (const auto& e : s.events) {
      if (e.centroid && vision::group_of(e.object_class) != vision::VehicleGroup::kExcluded) {
        EXPECT_EQ(vision::assign_lane(*e.centroid, g), e.lane);
      }
    }
  }
}

TEST(Scenario, Validation) {
  auto expect_bad = [](const std::function<void(ScenarioConfig&)>& edit) {
    auto c = short_config();
    edit(c);
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::kBadConfig);
  };
  expect_bad([](auto& c) { c.arrival_rate = -1; });
  expect_bad([](auto& c) { c.hdv_fraction = 1.5; });
  expect_bad([](auto& c) { c.planted_lag = 900; });
  expect_bad([](auto& c) { c.planted_lag = -900; });
  expect_bad([](auto& c) { c.duration = 3610; });
  expect_bad([](auto& c) { c.lane_count = 0; });
  expect_bad([](auto& c) { c.stop_wave.dwell = 100; });
  expect_bad([](auto& c) { c.noise_sigma = -1; });
  EXPECT_NO_THROW(validate(ScenarioConfig{}));
  EXPECT_EQ(code_of([] { parse_scenario_json(R"({"lanes": 2})"); }), ErrorCode::kBadConfig);
}

TEST(Scenario, JsonRoundTrip) {
  auto c = short_config();
  c.planted_lag = -120;
  c.emission_weights.hdv = 1234.5;
  c.label = "x";
  const auto json = scenario_to_json(c);
  EXPECT_EQ(scenario_to_json(parse_scenario_json(json)), json);
  EXPECT_EQ(parse_scenario_json("{}").planted_lag, 160);
}

TEST(LagPair, LayoutAndExactRecovery) {
  const auto p = make_lag_pair(1, 240, 20.0);
  EXPECT_EQ(p.bc.start, 240);
  EXPECT_EQ(p.activity.start, 0);
  EXPECT_EQ(p.bc.values.size(), p.activity.values.size());
  const auto zero = make_lag_pair(2, 0, 100.0);
  EXPECT_EQ(align::find_optimal_shift(zero.bc, zero.activity, align::ShiftSearchConfig::symmetric(600)).optimal_shift, 0);
  const auto neg = make_lag_pair(3, -150, 15.0);
  EXPECT_EQ(align::find_optimal_shift(neg.bc, neg.activity, align::ShiftSearchConfig::symmetric(300)).optimal_shift, -150);
  EXPECT_EQ(code_of([] { make_lag_pair(1, 2000, 10.0); }), ErrorCode::kBadConfig);
}

TEST(LagPair, NoiseMatchesTheRequestedSnr) {
  const auto p = make_lag_pair(5, 0, 10.0, 72000);
  double sig = 0, noise = 0, mean = 0;
  const auto n = static_cast<double>(p.activity.values.size());
  for (double c : p.activity.values) mean += 50 * c;
  mean /= n;
  for (std::size_t i = 0; i < p.activity.values.size(); ++i) {
    const double clean = 50 * p.activity.values[i];
    sig += (clean - mean) * (clean - mean);
    noise += (p.bc.values[i] - clean) * (p.bc.values[i] - clean);
  }
  EXPECT_NEAR(10 * std::log10(sig / noise), 10.0, 0.3);
}
