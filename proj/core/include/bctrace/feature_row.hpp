#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctrace/time.hpp"

namespace bctrace {

struct Forecast {
  double temperature = 0.0;
  double wind_speed = 0.0;
  double humidity = 0.0;
  bool operator==(const Forecast&) const = default;
};

// One 30-second bin: vehicle covariates, lagged weather, traffic density and
// the BC target. Per-lane vectors are indexed lane-1 (lane 1 = nearest the
// monitor) and all have the same length.
struct FeatureRow {
  UnixSeconds timestamp = 0;
  std::string dataset;
  int total_vehicle = 0;
  std::vector<int> ldpv;
  std::vector<int> hdv;
  std::vector<int> stop_ldpv;
  std::vector<int> stop_hdv;
  double his_temp = 0.0;   // degC, 2 min prior
  double his_wind = 0.0;   // km/h, 2 min prior
  double his_humid = 0.0;  // percent, 2 min prior
  std::optional<double> traffic;
  std::optional<double> bc_raw;   // ng/m3
  std::optional<double> bc_post;  // ng/m3, ONA-processed and aligned
  // Retained from the input but never part of the default feature set.
  std::optional<Forecast> forecast;

  std::size_t lane_count() const { return ldpv.size(); }
  bool operator==(const FeatureRow&) const = default;
};

// Which BC column serves as the regression target.
enum class TargetKind { kPost, kRaw };

inline std::optional<double> target_of(const FeatureRow& row, TargetKind kind) {
  return kind == TargetKind::kPost ? row.bc_post : row.bc_raw;
}

// Throws kRangeError on counts < 0, humidity outside [0,100], negative wind,
// traffic outside [0,1] or ragged lane vectors.
void validate(const FeatureRow& row);

// JSON array, a single object or newline-delimited objects using the dataset-row keys
// ("Time", "BC", "BC post", "car_line<k>", "truck_line<k>",
// "car_line<k>_stop", "truck_line<k>_stop", "traffic", "history_*",
// "forecast_*") plus the optional "dataset" and "TotalVehicle" keys. Lane
// keys absent from a row read as zero.
std::vector<FeatureRow> parse_feature_rows(std::string_view text);

// Canonical JSON array, every lane key present, fixed key order.
std::string serialize_feature_rows(std::span<const FeatureRow> rows);

// Flat CSV with one column per model feature plus targets.
std::string serialize_feature_rows_csv(std::span<const FeatureRow> rows);

}  // namespace bctrace
