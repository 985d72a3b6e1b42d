#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctrace/time.hpp"

namespace bctrace {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// One row of a microAeth AE51 export.
struct BcSample {
  UnixSeconds timestamp = 0;
  std::int64_t ref_count = 0;
  std::int64_t sen_count = 0;
  double atn = 0.0;
  double flow = 0.0;      // mL/min
  double pcb_temp = 0.0;  // degC
  int status = 0;
  double battery = 0.0;   // percent
  std::optional<double> bc_raw;  // ng/m3; may be negative, absent on warm-up
  std::optional<int> ona_pts;

  bool operator==(const BcSample&) const = default;
};

enum class ObjectClass { kCar, kTruck, kBus, kMotorcycle, kBicycle, kPerson, kStreetcar };

std::string_view to_string(ObjectClass c);
std::optional<ObjectClass> parse_object_class(std::string_view token);

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const PixelPoint&) const = default;
};

struct PixelRect {
  double x = 0.0;  // left
  double y = 0.0;  // top
  double width = 0.0;
  double height = 0.0;
  PixelPoint center() const { return {x + width / 2.0, y + height / 2.0}; }
  bool operator==(const PixelRect&) const = default;
};

// A first-seen record from the detection pipeline.
struct DetectionEvent {
  ObjectClass object_class = ObjectClass::kCar;
  std::optional<int> lane;  // 1-based; nullopt = unknown
  std::int64_t track_id = 0;
  UnixSeconds timestamp = 0;
  std::optional<PixelPoint> centroid;
  std::optional<PixelRect> bbox;

  bool operator==(const DetectionEvent&) const = default;
};

enum class WeatherKind { kHistorical, kForecast };

struct WeatherSample {
  UnixSeconds timestamp = 0;
  double temperature = 0.0;  // degC
  double wind_speed = 0.0;   // km/h
  double humidity = 0.0;     // percent
  WeatherKind kind = WeatherKind::kHistorical;

  bool operator==(const WeatherSample&) const = default;
};

struct TrafficDensitySample {
  UnixSeconds timestamp = 0;
  double ratio = 0.0;  // [0, 1]

  bool operator==(const TrafficDensitySample&) const = default;
};

// BC readings on a uniform grid. Missing cells hold NaN in both arrays.
struct BcSeries {
  UnixSeconds start = 0;
  std::int64_t step = 30;
  std::vector<double> values;
  std::vector<double> atn;

  std::size_t size() const { return values.size(); }
  UnixSeconds time_at(std::size_t i) const {
    return start + static_cast<std::int64_t>(i) * step;
  }
  UnixSeconds end() const { return time_at(values.size()); }
  // Cell whose window [t_i, t_i + step) contains t.
  std::optional<std::size_t> index_of(UnixSeconds t) const;
  // Value of the cell containing t, or NaN outside the grid.
  double value_at(UnixSeconds t) const;
};

// AE51 CSV. Header must name the instrument columns (case-insensitive); the
// trailing Ona_#_pts_avg column is optional.
std::vector<BcSample> parse_ae51_csv(std::string_view text);
std::string serialize_ae51_csv(std::span<const BcSample> samples);

// "<class>_line<k> : <id> <YYYY-MM-DD HH:MM:SS>", one event per line. An
// unknown lane is written as "_line?".
std::vector<DetectionEvent> parse_event_log(std::string_view text);
std::string serialize_event_log(std::span<const DetectionEvent> events);

// Weather and traffic feeds: CSV with a header row, or a JSON array of
// objects. Output is sorted by timestamp.
std::vector<WeatherSample> parse_weather(std::string_view text);
std::string serialize_weather_csv(std::span<const WeatherSample> samples);
std::vector<TrafficDensitySample> parse_traffic(std::string_view text);
std::string serialize_traffic_csv(std::span<const TrafficDensitySample> samples);

// Grid anchored at the first sample. Each cell takes the first sample whose
// timestamp falls inside it; no interpolation.
BcSeries resample_to_grid(std::span<const BcSample> samples, std::int64_t step);

}  // namespace bctrace
