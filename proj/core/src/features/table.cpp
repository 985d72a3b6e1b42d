#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/features.hpp"

namespace bctrace::features {
namespace {

// Index of the element nearest to t (ties to the earlier one), or nullopt
// when it is more than max_gap away.
template <typename T>
std::optional<std::size_t> nearest(const std::vector<T>& sorted, UnixSeconds t,
                                   std::int64_t max_gap) {
  if (sorted.empty()) return std::nullopt;
  auto it = std::lower_bound(sorted.begin(), sorted.end(), t,
                             [](const T& s, UnixSeconds v) { return s.timestamp < v; });
  std::optional<std::size_t> best;
  std::int64_t best_gap = 0;
  auto consider = [&](std::size_t i) {
    const std::int64_t gap = std::abs(sorted[i].timestamp - t);
    if (!best || gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  };
  if (it != sorted.begin()) consider(static_cast<std::size_t>(it - sorted.begin() - 1));
  if (it != sorted.end()) consider(static_cast<std::size_t>(it - sorted.begin()));
  if (!best || best_gap > max_gap) return std::nullopt;
  return best;
}

std::optional<double> present(double v) {
  if (is_missing(v)) return std::nullopt;
  return v;
}

}  // namespace

FeatureTable build_feature_table(const vision::CountReport& counts,
                                 std::span<const WeatherSample> weather,
                                 std::span<const TrafficDensitySample> traffic,
                                 const BcSeries& bc_post, const BcSeries* bc_raw,
                                 const std::string& dataset, const JoinConfig& cfg) {
  std::vector<WeatherSample> hist, forecast;
  for (const auto& w : weather) (w.kind == WeatherKind::kHistorical ? hist : forecast).push_back(w);
  auto by_time = [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; };
  std::stable_sort(hist.begin(), hist.end(), by_time);
  std::stable_sort(forecast.begin(), forecast.end(), by_time);
  std::vector<TrafficDensitySample> dens(traffic.begin(), traffic.end());
  std::stable_sort(dens.begin(), dens.end(), by_time);
  std::vector<vision::BinCounts> bins = counts.bins;
  std::stable_sort(bins.begin(), bins.end(),
                   [](const auto& a, const auto& b) { return a.bin_start < b.bin_start; });

  FeatureTable out;
  for (const auto& b : bins) {
    FeatureRow row;
    row.timestamp = b.bin_start;
    row.dataset = dataset;
    row.total_vehicle = b.total_vehicle;
    row.ldpv = b.ldpv;
    row.hdv = b.hdv;
    row.stop_ldpv = b.stop_ldpv;
    row.stop_hdv = b.stop_hdv;

    const auto w = nearest(hist, b.bin_start - cfg.weather_lag, cfg.weather_max_gap);
    if (!w) {
      throw Error(ErrorCode::kNoWeatherCoverage,
                  fmt::format("no weather sample within {} s of {} for bin {}", cfg.weather_max_gap,
                              format_iso8601(b.bin_start - cfg.weather_lag),
                              format_iso8601(b.bin_start)));
    }
    row.his_temp = hist[*w].temperature;
    row.his_wind = hist[*w].wind_speed;
    row.his_humid = hist[*w].humidity;
    if (const auto f = nearest(forecast, b.bin_start, cfg.weather_max_gap)) {
      row.forecast = Forecast{forecast[*f].temperature, forecast[*f].wind_speed, forecast[*f].humidity};
    }
    if (const auto d = nearest(dens, b.bin_start, cfg.traffic_window)) row.traffic = dens[*d].ratio;

    row.bc_post = present(bc_post.value_at(b.bin_start));
    if (bc_raw) row.bc_raw = present(bc_raw->value_at(b.bin_start));
    if (!target_of(row, cfg.target)) {
      out.dropped_no_target.push_back(b.bin_start);
      continue;
    }
    validate(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<std::string> default_feature_names(std::size_t lane_count, bool include_traffic) {
  std::vector<std::string> names{"TotalVehicle"};
  for (const char* prefix : {"LDPV_", "HDV_", "StopLDPV_", "StopHDV_"}) {
    for (std::size_t k = 1; k <= lane_count; ++k) names.push_back(fmt::format("{}{}", prefix, k));
  }
  names.insert(names.end(), {"his_temp", "his_wind", "his_humid"});
  if (include_traffic) names.emplace_back("traffic");
  return names;
}

double feature_value(const FeatureRow& row, std::string_view name) {
  if (name == "TotalVehicle") return row.total_vehicle;
  if (name == "his_temp") return row.his_temp;
  if (name == "his_wind") return row.his_wind;
  if (name == "his_humid") return row.his_humid;
  if (name == "traffic") return row.traffic ? *row.traffic : kMissing;
  struct Lane {
    std::string_view prefix;
    const std::vector<int>& values;
  };
  for (const Lane& l : {Lane{"StopLDPV_", row.stop_ldpv}, Lane{"StopHDV_", row.stop_hdv},
                        Lane{"LDPV_", row.ldpv}, Lane{"HDV_", row.hdv}}) {
    if (!name.starts_with(l.prefix)) continue;
    const auto rest = name.substr(l.prefix.size());
    std::size_t k = 0;
    for (char ch : rest) {
      if (ch < '0' || ch > '9') {
        k = 0;
        break;
      }
      k = k * 10 + static_cast<std::size_t>(ch - '0');
    }
    if (k >= 1 && k <= l.values.size()) return l.values[k - 1];
    break;
  }
  throw Error(ErrorCode::kMissingKey, fmt::format("unknown feature '{}'", name));
}

bool any_traffic(std::span<const FeatureRow> rows) {
  return std::any_of(rows.begin(), rows.end(), [](const FeatureRow& r) { return r.traffic.has_value(); });
}

model::Dataset to_dataset(std::span<const FeatureRow> rows, std::span<const std::string> names,
                          TargetKind target) {
  model::Dataset d;
  d.feature_names.assign(names.begin(), names.end());
  d.x.reserve(rows.size() * names.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto y = target_of(rows[r], target);
    if (!y) {
      throw Error(ErrorCode::kBadParams,
                  fmt::format("row {} ({}) has no target", r, format_iso8601(rows[r].timestamp)));
    }
    for (const auto& n : names) d.x.push_back(feature_value(rows[r], n));
    d.y.push_back(*y);
  }
  return d;
}

}  // namespace bctrace::features
