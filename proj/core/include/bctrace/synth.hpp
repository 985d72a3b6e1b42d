#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bctrace/align.hpp"
#include "bctrace/ingest.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::synth {

struct StopWave {
  double period = 90.0;  // seconds between red phases
  double dwell = 30.0;   // red duration
};

// BC contribution (ng/m3) per vehicle counted in a 30 s bin, summed over
// lanes.
struct EmissionWeights {
  double intercept = 0.0;
  double ldpv = 320.0;
  double hdv = 4800.0;
  double stop_ldpv = 640.0;
  double stop_hdv = 4800.0;
};

struct ScenarioConfig {
  UnixSeconds start = 1730822400;  // 2024-11-05T16:00:00Z
  std::int64_t duration = 21600;   // seconds
  std::size_t lane_count = 2;
  double arrival_rate = 8.0;  // vehicles per minute per lane, time average
  // Arrival rate follows arrival_rate * (1 + rate_modulation * sin(...)) with
  // the given period; 0 gives a homogeneous Poisson stream.
  double rate_modulation = 1.0;
  double rate_period = 3600.0;
  double hdv_fraction = 0.05;
  StopWave stop_wave;
  std::int64_t planted_lag = 160;  // BC trails activity by this much
  EmissionWeights emission_weights;
  double noise_sigma = 100.0;  // ng/m3
  double wind_dilution = 1.0;  // BC divided by (1 + wind_dilution * wind); 0 disables
  std::uint64_t seed = 7;
  std::string label = "synthetic";
  // Rendering and instrument details.
  int frame_width = 640;
  int frame_height = 360;
  double fps = 2.0;
  double speed = 40.0;        // px/s when unobstructed
  double min_spacing = 60.0;  // px between consecutive vehicles in a lane
  double stop_line_x = 400.0;
  double jitter = 0.3;           // px, detector centroid noise
  double pedestrian_rate = 0.3;  // per minute, on the sidewalk
  double atn_rate = 5e-4;        // ATN gained per (ng/m3) per 30 s reading
};

// kBadConfig on negative rates, hdv_fraction outside [0, 1],
// |planted_lag| >= duration / 4 and other unusable settings.
void validate(const ScenarioConfig& cfg);
ScenarioConfig parse_scenario_json(std::string_view text);
std::string scenario_to_json(const ScenarioConfig& cfg);

struct TrueVehicle {
  std::int64_t id = 0;
  ObjectClass object_class = ObjectClass::kCar;
  int lane = 0;  // 0 for pedestrians (off the road)
  double first_seen = 0.0;
  double last_seen = 0.0;
  std::vector<std::pair<double, double>> stops;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<BcSample> ae51;
  std::vector<DetectionEvent> events;
  std::vector<vision::Frame> frames;
  vision::GrayImage background;
  vision::LaneGeometry lanes;
  std::vector<WeatherSample> weather;
  std::vector<TrafficDensitySample> traffic;
  std::vector<TrueVehicle> vehicles;
  vision::CountReport true_counts;  // first-seen counts and true stops per bin
  std::vector<double> bc_clean;     // noise-free BC per bin
  std::vector<double> his_wind;     // wind seen by each bin's feature row
};

Scenario generate_scenario(const ScenarioConfig& cfg);

// Ground truth: config, lag, weights, per-bin counts and clean BC, vehicles.
std::string manifest_json(const Scenario& s);

// Light-weight pair for lag-recovery trials: Poisson vehicle counts on a 30 s
// grid and a BC series driven by them, sampled `lag` seconds later, with
// Gaussian noise at the given signal-to-noise ratio.
struct LagPair {
  align::GridSeries activity;
  align::GridSeries bc;
};
LagPair make_lag_pair(std::uint64_t seed, std::int64_t lag, double snr_db,
                      std::int64_t duration = 7200, double rate_per_bin = 8.0);

}  // namespace bctrace::synth
