#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/synth.hpp"

namespace bctrace::synth {
namespace {

using ojson = nlohmann::ordered_json;

constexpr double kBottomBoundary = 340.0;
constexpr double kLaneHeight = 60.0;
constexpr double kSidewalkY = 352.0;
constexpr std::int64_t kBin = 30;
constexpr double kMinStop = 4.0;

double boundary_y(std::size_t k) { return kBottomBoundary - kLaneHeight * static_cast<double>(k); }
double lane_centre(int lane) { return boundary_y(static_cast<std::size_t>(lane - 1)) - kLaneHeight / 2.0; }

struct Size {
  double w;
  double h;
};

Size size_of(ObjectClass c) {
  switch (c) {
    case ObjectClass::kMotorcycle: return {20, 16};
    case ObjectClass::kTruck: return {60, 32};
    case ObjectClass::kBus: return {70, 34};
    case ObjectClass::kPerson: return {10, 24};
    default: return {40, 24};
  }
}

struct Agent {
  TrueVehicle truth;
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;
  double still_since = -1.0;  // time of the frame it stopped at, or < 0
};

vision::GrayImage render_background(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  vision::GrayImage img(cfg.frame_width, cfg.frame_height, 150);
  const double top = boundary_y(cfg.lane_count);
  std::uniform_int_distribution<int> noise(-3, 3);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t base = y > kBottomBoundary ? 170 : y >= top ? 90 : 150;
    for (int x = 0; x < img.width; ++x) img.at(x, y) = static_cast<std::uint8_t>(base + noise(rng));
  }
  // Poles: strong vertical edges the orientation window must reject.
  for (int px : {100, 520}) {
    for (int y = std::max(0, static_cast<int>(top) - 100); y < static_cast<int>(top); ++y) {
      for (int x = px; x < px + 4 && x < img.width; ++x) img.at(x, y) = 60;
    }
  }
  for (std::size_t k = 0; k <= cfg.lane_count; ++k) {
    const int y = static_cast<int>(boundary_y(k));
    for (int row : {y - 1, y}) {
      if (row < 0 || row >= img.height) continue;
      for (int x = 0; x < img.width; ++x) img.at(x, row) = 230;
    }
  }
  return img;
}

double wind_for_bin(const std::vector<WeatherSample>& weather, UnixSeconds bin_start) {
  // Same rule as the feature join: nearest to bin_start - 120 s, ties earlier.
  const UnixSeconds target = bin_start - 120;
  double best = weather.front().wind_speed;
  std::int64_t gap = std::numeric_limits<std::int64_t>::max();
  for (const auto& w : weather) {
    const std::int64_t g = std::abs(w.timestamp - target);
    if (g < gap) {
      gap = g;
      best = w.wind_speed;
    }
  }
  return best;
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kBadConfig, msg); };
  if (cfg.duration < 4 * kBin) bad("duration must cover at least 4 bins");
  if (cfg.duration % kBin != 0) bad("duration must be a multiple of 30 s");
  if (cfg.lane_count < 1 || cfg.lane_count > 5) bad("lane_count must be 1..5");
  if (!(cfg.arrival_rate >= 0.0)) bad("arrival_rate must be >= 0");
  if (!(cfg.rate_modulation >= 0.0 && cfg.rate_modulation <= 1.0)) bad("rate_modulation must lie in [0, 1]");
  if (!(cfg.rate_period > 0.0)) bad("rate_period must be positive");
  if (!(cfg.hdv_fraction >= 0.0 && cfg.hdv_fraction <= 1.0)) bad("hdv_fraction must lie in [0, 1]");
  if (!(cfg.stop_wave.period > 0.0) || cfg.stop_wave.dwell < 0.0 ||
      cfg.stop_wave.dwell >= cfg.stop_wave.period) {
    bad("stop wave needs period > 0 and 0 <= dwell < period");
  }
  if (4 * std::abs(cfg.planted_lag) >= cfg.duration) bad("|planted_lag| must be < duration / 4");
  if (!(cfg.noise_sigma >= 0.0) || !(cfg.wind_dilution >= 0.0)) bad("noise and dilution must be >= 0");
  if (!(cfg.fps > 0.0) || !(cfg.speed > 0.0) || !(cfg.min_spacing > 0.0)) bad("fps, speed and spacing must be positive");
  if (cfg.frame_width < 64 || cfg.frame_height < 360) bad("frame must be at least 64x360");
  if (!(cfg.pedestrian_rate >= 0.0) || !(cfg.atn_rate >= 0.0) || !(cfg.jitter >= 0.0)) {
    bad("pedestrian_rate, atn_rate and jitter must be >= 0");
  }
}

ScenarioConfig parse_scenario_json(std::string_view text) {
  ScenarioConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& [key, v] : j.items()) {
      if (key == "start") {
        const auto t = parse_datetime(v.get<std::string>());
        if (!t) throw Error(ErrorCode::kBadConfig, fmt::format("bad start '{}'", v.dump()));
        c.start = *t;
      } else if (key == "duration") { c.duration = v.get<std::int64_t>();
      } else if (key == "lane_count") { c.lane_count = v.get<std::size_t>();
      } else if (key == "arrival_rate") { c.arrival_rate = v.get<double>();
      } else if (key == "rate_modulation") { c.rate_modulation = v.get<double>();
      } else if (key == "rate_period") { c.rate_period = v.get<double>();
      } else if (key == "hdv_fraction") { c.hdv_fraction = v.get<double>();
      } else if (key == "stop_wave") {
        c.stop_wave.period = v.value("period", c.stop_wave.period);
        c.stop_wave.dwell = v.value("dwell", c.stop_wave.dwell);
      } else if (key == "planted_lag") { c.planted_lag = v.get<std::int64_t>();
      } else if (key == "emission_weights") {
        auto& w = c.emission_weights;
        w.intercept = v.value("intercept", w.intercept);
        w.ldpv = v.value("ldpv", w.ldpv);
        w.hdv = v.value("hdv", w.hdv);
        w.stop_ldpv = v.value("stop_ldpv", w.stop_ldpv);
        w.stop_hdv = v.value("stop_hdv", w.stop_hdv);
      } else if (key == "noise_sigma") { c.noise_sigma = v.get<double>();
      } else if (key == "wind_dilution") { c.wind_dilution = v.get<double>();
      } else if (key == "seed") { c.seed = v.get<std::uint64_t>();
      } else if (key == "label") { c.label = v.get<std::string>();
      } else if (key == "frame_width") { c.frame_width = v.get<int>();
      } else if (key == "frame_height") { c.frame_height = v.get<int>();
      } else if (key == "fps") { c.fps = v.get<double>();
      } else if (key == "speed") { c.speed = v.get<double>();
      } else if (key == "min_spacing") { c.min_spacing = v.get<double>();
      } else if (key == "stop_line_x") { c.stop_line_x = v.get<double>();
      } else if (key == "jitter") { c.jitter = v.get<double>();
      } else if (key == "pedestrian_rate") { c.pedestrian_rate = v.get<double>();
      } else if (key == "atn_rate") { c.atn_rate = v.get<double>();
      } else {
        throw Error(ErrorCode::kBadConfig, fmt::format("unknown scenario key '{}'", key));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kBadConfig, fmt::format("scenario: {}", e.what()));
  }
  validate(c);
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  ojson j;
  j["start"] = format_iso8601(c.start);
  j["duration"] = c.duration;
  j["lane_count"] = c.lane_count;
  j["arrival_rate"] = c.arrival_rate;
  j["rate_modulation"] = c.rate_modulation;
  j["rate_period"] = c.rate_period;
  j["hdv_fraction"] = c.hdv_fraction;
  j["stop_wave"] = {{"period", c.stop_wave.period}, {"dwell", c.stop_wave.dwell}};
  j["planted_lag"] = c.planted_lag;
  j["emission_weights"] = {{"intercept", c.emission_weights.intercept},
                           {"ldpv", c.emission_weights.ldpv},
                           {"hdv", c.emission_weights.hdv},
                           {"stop_ldpv", c.emission_weights.stop_ldpv},
                           {"stop_hdv", c.emission_weights.stop_hdv}};
  j["noise_sigma"] = c.noise_sigma;
  j["wind_dilution"] = c.wind_dilution;
  j["seed"] = c.seed;
  j["label"] = c.label;
  j["frame_width"] = c.frame_width;
  j["frame_height"] = c.frame_height;
  j["fps"] = c.fps;
  j["speed"] = c.speed;
  j["min_spacing"] = c.min_spacing;
  j["stop_line_x"] = c.stop_line_x;
  j["jitter"] = c.jitter;
  j["pedestrian_rate"] = c.pedestrian_rate;
  j["atn_rate"] = c.atn_rate;
  return j.dump(2) + "\n";
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  Scenario s;
  s.config = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  s.background = render_background(cfg, rng);
  s.lanes.reference = {cfg.frame_width / 2.0, static_cast<double>(cfg.frame_height)};
  for (std::size_t k = 0; k <= cfg.lane_count; ++k) {
    s.lanes.boundaries.push_back(vision::Line{boundary_y(k), std::numbers::pi / 2.0, cfg.frame_width});
  }

  const UnixSeconds end = cfg.start + cfg.duration;
  const auto n_bins = static_cast<std::size_t>(cfg.duration / kBin);

  // Arrival schedules (seconds from start) per lane, plus the sidewalk as
  // lane 0. Vehicle streams are thinned from the peak rate.
  std::vector<std::deque<double>> arrivals(cfg.lane_count + 1);
  const double phase = 2.0 * std::numbers::pi * unit(rng);
  auto schedule = [&](std::deque<double>& out, double per_minute, double modulation) {
    if (per_minute <= 0.0) return;
    const double peak = per_minute * (1.0 + modulation);
    std::exponential_distribution<double> gap(peak / 60.0);
    for (double t = gap(rng); t < static_cast<double>(cfg.duration); t += gap(rng)) {
      const double rate =
          per_minute * (1.0 + modulation * std::sin(2.0 * std::numbers::pi * t / cfg.rate_period + phase));
      if (unit(rng) * peak < rate) out.push_back(t);
    }
  };
  schedule(arrivals[0], cfg.pedestrian_rate, 0.0);
  for (std::size_t l = 1; l <= cfg.lane_count; ++l) schedule(arrivals[l], cfg.arrival_rate, cfg.rate_modulation);

  std::vector<std::vector<Agent>> lanes(cfg.lane_count + 1);  // ordered by entry
  std::vector<TrueVehicle> finished;
  std::int64_t next_id = 1;
  const double dt = 1.0 / cfg.fps;
  const auto n_frames = static_cast<std::size_t>(std::floor(static_cast<double>(cfg.duration) * cfg.fps));
  s.frames.reserve(n_frames);

  auto retire = [&](Agent& a) {
    if (a.still_since >= 0.0 && a.truth.last_seen - a.still_since >= kMinStop) {
      a.truth.stops.emplace_back(a.still_since, a.truth.last_seen);
    }
    finished.push_back(std::move(a.truth));
  };

  for (std::size_t f = 0; f < n_frames; ++f) {
    const double rel = static_cast<double>(f) * dt;
    const double t = static_cast<double>(cfg.start) + rel;
    const bool red = std::fmod(rel, cfg.stop_wave.period) < cfg.stop_wave.dwell;

    for (std::size_t l = 0; l <= cfg.lane_count; ++l) {
      auto& agents = lanes[l];
      const bool sidewalk = l == 0;
      // Move leaders first so followers see updated positions.
      for (std::size_t i = 0; i < agents.size(); ++i) {
        auto& a = agents[i];
        if (f == 0 || a.truth.first_seen == t) continue;
        double target = a.x + a.speed * dt;
        if (!sidewalk) {
          if (red && a.x <= cfg.stop_line_x) target = std::min(target, cfg.stop_line_x);
          if (i > 0) target = std::min(target, agents[i - 1].x - cfg.min_spacing);
        }
        const double nx = std::max(a.x, target);
        if (nx == a.x) {
          if (a.still_since < 0.0) a.still_since = t - dt;
        } else {
          if (a.still_since >= 0.0 && (t - dt) - a.still_since >= kMinStop) {
            a.truth.stops.emplace_back(a.still_since, t - dt);
          }
          a.still_since = -1.0;
        }
        a.x = nx;
      }
      // Departures off the right edge.
      while (!agents.empty() && agents.front().x > cfg.frame_width) {
        retire(agents.front());
        agents.erase(agents.begin());
      }
      // Entries: one per frame when the entrance is clear.
      auto& queue = arrivals[l];
      if (!queue.empty() && queue.front() <= rel &&
          (sidewalk || agents.empty() || agents.back().x >= cfg.min_spacing)) {
        queue.pop_front();
        Agent a;
        a.truth.id = next_id++;
        a.truth.lane = static_cast<int>(l);
        a.truth.first_seen = t;
        if (sidewalk) {
          a.truth.object_class = ObjectClass::kPerson;
          a.y = kSidewalkY;
          a.speed = 15.0;
        } else {
          const bool heavy = unit(rng) < cfg.hdv_fraction;
          const double u = unit(rng);
          a.truth.object_class = heavy ? (u < 0.8 ? ObjectClass::kTruck : ObjectClass::kBus)
                                       : (u < 0.9 ? ObjectClass::kCar : ObjectClass::kMotorcycle);
          a.y = lane_centre(static_cast<int>(l));
          a.speed = cfg.speed;
        }
        agents.push_back(std::move(a));
      }
    }

    vision::Frame frame;
    frame.timestamp = t;
    for (std::size_t l = 0; l <= cfg.lane_count; ++l) {
      for (auto& a : lanes[l]) {
        a.truth.last_seen = t;
        const auto sz = size_of(a.truth.object_class);
        const double cx = a.x + cfg.jitter * gauss(rng);
        const double cy = a.y + cfg.jitter * gauss(rng);
        frame.detections.push_back(vision::FrameDetection{
            a.truth.object_class, {cx, cy}, PixelRect{cx - sz.w / 2, cy - sz.h / 2, sz.w, sz.h}});
      }
    }
    s.frames.push_back(std::move(frame));
  }
  for (auto& agents : lanes) {
    for (auto& a : agents) retire(a);
  }
  std::sort(finished.begin(), finished.end(),
            [](const TrueVehicle& a, const TrueVehicle& b) { return a.id < b.id; });
  s.vehicles = std::move(finished);

  for (const auto& v : s.vehicles) {
    DetectionEvent e;
    e.object_class = v.object_class;
    if (v.lane > 0) e.lane = v.lane;
    e.track_id = v.id;
    e.timestamp = static_cast<UnixSeconds>(std::floor(v.first_seen));
    s.events.push_back(e);
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

  std::vector<vision::Track> truth_tracks;
  for (const auto& v : s.vehicles) {
    vision::Track tr;
    tr.track_id = v.id;
    tr.object_class = v.object_class;
    if (v.lane > 0) tr.lane = v.lane;
    tr.history = {{v.first_seen, {}}, {v.last_seen, {}}};
    tr.stop_intervals = v.stops;
    truth_tracks.push_back(std::move(tr));
  }
  s.true_counts = vision::bin_counts(truth_tracks, vision::CountOptions{cfg.lane_count, kBin, cfg.start, end});

  // Weather every 5 minutes: wind wanders (it drives dilution), temperature
  // and humidity are uninformative jitter around fixed levels.
  double wind = 15.0;
  for (UnixSeconds t = cfg.start - 1800; t <= end + 600; t += 300) {
    wind = std::clamp(wind + 0.5 * (15.0 - wind) + 10.0 * gauss(rng), 3.0, 35.0);
    const double temp = 19.0 + 0.8 * gauss(rng);
    const double humid = std::clamp(67.0 + 4.0 * gauss(rng), 0.0, 100.0);
    s.weather.push_back(WeatherSample{t, std::round(temp * 10) / 10, std::round(wind * 10) / 10,
                                      std::round(humid), WeatherKind::kHistorical});
  }
  // Traffic density: a nuisance feed unrelated to the counts.
  for (UnixSeconds t = cfg.start; t <= end; t += 60) {
    const double ratio = std::clamp(0.5 + 0.15 * gauss(rng), 0.05, 0.95);
    s.traffic.push_back(TrafficDensitySample{t, std::round(ratio * 100) / 100});
  }

  // BC per bin from the true covariates, sampled planted_lag seconds later.
  const auto& w = cfg.emission_weights;
  double atn = 10.0;
  double battery = 100.0;
  for (std::size_t j = 0; j < n_bins; ++j) {
    const auto& b = s.true_counts.bins[j];
    double e = w.intercept;
    for (std::size_t l = 0; l < cfg.lane_count; ++l) {
      e += w.ldpv * b.ldpv[l] + w.hdv * b.hdv[l] + w.stop_ldpv * b.stop_ldpv[l] + w.stop_hdv * b.stop_hdv[l];
    }
    const double his_wind = wind_for_bin(s.weather, b.bin_start);
    const double clean = e / (1.0 + cfg.wind_dilution * his_wind);
    s.bc_clean.push_back(clean);
    s.his_wind.push_back(his_wind);
    const double noisy = std::round(clean + cfg.noise_sigma * gauss(rng));

    atn += cfg.atn_rate * std::max(clean, 0.0) + 1e-4 * std::abs(gauss(rng));
    battery = std::max(0.0, battery - 0.05);
    BcSample sample;
    sample.timestamp = b.bin_start + cfg.planted_lag;
    sample.ref_count = 900000 + static_cast<std::int64_t>(j % 7);
    sample.sen_count = static_cast<std::int64_t>(std::llround(static_cast<double>(sample.ref_count) * std::exp(-atn / 100.0)));
    sample.atn = std::round(atn * 1e6) / 1e6;
    sample.flow = 150.0;
    sample.pcb_temp = 30.0 + 0.1 * static_cast<double>(j % 5);
    sample.status = 0;
    sample.battery = std::round(battery * 10) / 10;
    if (j > 0) sample.bc_raw = noisy;  // warm-up row carries no BC
    s.ae51.push_back(sample);
  }
  return s;
}

std::string manifest_json(const Scenario& s) {
  ojson j;
  j["format"] = "bctrace.manifest";
  j["version"] = 1;
  j["config"] = ojson::parse(scenario_to_json(s.config));
  j["planted_lag"] = s.config.planted_lag;
  j["lane_boundaries"] = ojson::array();
  for (const auto& l : s.lanes.boundaries) j["lane_boundaries"].push_back({{"rho", l.rho}, {"theta", l.theta}});
  j["bins"] = ojson::array();
  for (std::size_t i = 0; i < s.true_counts.bins.size(); ++i) {
    const auto& b = s.true_counts.bins[i];
    j["bins"].push_back({{"bin_start", format_iso8601(b.bin_start)},
                         {"TotalVehicle", b.total_vehicle},
                         {"LDPV", b.ldpv},
                         {"HDV", b.hdv},
                         {"StopLDPV", b.stop_ldpv},
                         {"StopHDV", b.stop_hdv},
                         {"his_wind", s.his_wind[i]},
                         {"bc_clean", s.bc_clean[i]}});
  }
  j["vehicles"] = ojson::array();
  for (const auto& v : s.vehicles) {
    ojson stops = ojson::array();
    for (const auto& [a, b] : v.stops) stops.push_back({a, b});
    j["vehicles"].push_back({{"id", v.id},
                             {"class", to_string(v.object_class)},
                             {"lane", v.lane > 0 ? ojson(v.lane) : ojson()},
                             {"first_seen", v.first_seen},
                             {"last_seen", v.last_seen},
                             {"stops", stops}});
  }
  return j.dump(1) + "\n";
}

LagPair make_lag_pair(std::uint64_t seed, std::int64_t lag, double snr_db, std::int64_t duration,
                      double rate_per_bin) {
  if (duration < 4 * kBin || 4 * std::abs(lag) >= duration) {
    throw Error(ErrorCode::kBadConfig, "lag pair needs |lag| < duration / 4");
  }
  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> count(rate_per_bin);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto n = static_cast<std::size_t>(duration / kBin);
  LagPair p;
  p.activity.start = 0;
  p.activity.step = kBin;
  p.bc.start = lag;
  p.bc.step = kBin;
  std::vector<double> clean(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int c = count(rng);
    p.activity.values.push_back(c);
    clean[i] = 50.0 * c;
    mean += clean[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : clean) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double sigma = std::sqrt(var / std::pow(10.0, snr_db / 10.0));
  for (double v : clean) p.bc.values.push_back(v + sigma * gauss(rng));
  return p;
}

}  // namespace bctrace::synth
