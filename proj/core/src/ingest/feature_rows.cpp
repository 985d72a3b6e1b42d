#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/feature_row.hpp"
#include "text.hpp"

namespace bctrace {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class LaneField { kLdpv, kHdv, kStopLdpv, kStopHdv };

struct LaneKey {
  LaneField field;
  int lane;
};

// "car_line3" / "truck_line2_stop" -> (field, lane).
std::optional<LaneKey> parse_lane_key(std::string_view key) {
  bool truck = false;
  if (key.starts_with("car_line")) {
    key.remove_prefix(8);
  } else if (key.starts_with("truck_line")) {
    key.remove_prefix(10);
    truck = true;
  } else {
    return std::nullopt;
  }
  bool stop = false;
  if (key.ends_with("_stop")) {
    key.remove_suffix(5);
    stop = true;
  }
  int lane = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), lane);
  if (ec != std::errc() || ptr != key.data() + key.size() || lane < 1) {
    return std::nullopt;
  }
  LaneField f = truck ? (stop ? LaneField::kStopHdv : LaneField::kHdv)
                      : (stop ? LaneField::kStopLdpv : LaneField::kLdpv);
  return LaneKey{f, lane};
}

const json& require_key(const json& obj, const char* key, std::size_t row) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::kMissingKey, key, row);
  return *it;
}

double as_number(const json& v, std::string_view key, std::size_t row) {
  if (!v.is_number()) {
    throw Error(ErrorCode::kTypeMismatch,
                fmt::format("'{}' must be a number", key), row);
  }
  return v.get<double>();
}

std::optional<double> as_optional_number(const json& v, std::string_view key,
                                         std::size_t row) {
  if (v.is_null()) return std::nullopt;
  return as_number(v, key, row);
}

int as_count(const json& v, std::string_view key, std::size_t row) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d) return static_cast<int>(d);
  }
  throw Error(ErrorCode::kTypeMismatch,
              fmt::format("'{}' must be an integer count", key), row);
}

FeatureRow row_from_json(const json& obj, std::size_t row) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kTypeMismatch, "feature row is not an object", row);
  }
  FeatureRow r;
  const json& time = require_key(obj, "Time", row);
  if (!time.is_string()) throw Error(ErrorCode::kTypeMismatch, "'Time' must be a string", row);
  const auto ts = parse_datetime(time.get<std::string>());
  if (!ts) throw Error(ErrorCode::kTypeMismatch, "'Time' is not a timestamp", row);
  r.timestamp = *ts;
  if (auto it = obj.find("dataset"); it != obj.end()) {
    if (!it->is_string()) throw Error(ErrorCode::kTypeMismatch, "'dataset' must be a string", row);
    r.dataset = it->get<std::string>();
  }
  r.bc_raw = as_optional_number(require_key(obj, "BC", row), "BC", row);
  r.bc_post = as_optional_number(require_key(obj, "BC post", row), "BC post", row);
  r.his_temp = as_number(require_key(obj, "history_temperature", row), "history_temperature", row);
  r.his_wind = as_number(require_key(obj, "history_wind_speed", row), "history_wind_speed", row);
  r.his_humid = as_number(require_key(obj, "history_humidity", row), "history_humidity", row);
  if (auto it = obj.find("traffic"); it != obj.end()) {
    r.traffic = as_optional_number(*it, "traffic", row);
  }

  const bool has_ft = obj.contains("forecast_temperature");
  const bool has_fw = obj.contains("forecast_wind_speed");
  const bool has_fh = obj.contains("forecast_humidity");
  if (has_ft || has_fw || has_fh) {
    Forecast f;
    f.temperature = as_number(require_key(obj, "forecast_temperature", row), "forecast_temperature", row);
    f.wind_speed = as_number(require_key(obj, "forecast_wind_speed", row), "forecast_wind_speed", row);
    f.humidity = as_number(require_key(obj, "forecast_humidity", row), "forecast_humidity", row);
    r.forecast = f;
  }

  std::vector<std::pair<LaneKey, int>> lane_values;
  int lanes = 0;
  for (const auto& [key, value] : obj.items()) {
    if (auto lk = parse_lane_key(key)) {
      lane_values.emplace_back(*lk, as_count(value, key, row));
      lanes = std::max(lanes, lk->lane);
    }
  }
  r.ldpv.assign(lanes, 0);
  r.hdv.assign(lanes, 0);
  r.stop_ldpv.assign(lanes, 0);
  r.stop_hdv.assign(lanes, 0);
  for (const auto& [lk, value] : lane_values) {
    const auto i = static_cast<std::size_t>(lk.lane - 1);
    switch (lk.field) {
      case LaneField::kLdpv: r.ldpv[i] = value; break;
      case LaneField::kHdv: r.hdv[i] = value; break;
      case LaneField::kStopLdpv: r.stop_ldpv[i] = value; break;
      case LaneField::kStopHdv: r.stop_hdv[i] = value; break;
    }
  }
  if (auto it = obj.find("TotalVehicle"); it != obj.end()) {
    r.total_vehicle = as_count(*it, "TotalVehicle", row);
  } else {
    for (std::size_t i = 0; i < r.ldpv.size(); ++i) r.total_vehicle += r.ldpv[i] + r.hdv[i];
  }
  try {
    validate(r);
  } catch (const Error& e) {
    throw Error(e.code(), e.message(), row);
  }
  return r;
}

}  // namespace

void validate(const FeatureRow& r) {
  const std::size_t lanes = r.ldpv.size();
  if (r.hdv.size() != lanes || r.stop_ldpv.size() != lanes ||
      r.stop_hdv.size() != lanes) {
    throw Error(ErrorCode::kRangeError, "per-lane vectors differ in length");
  }
  auto non_negative = [](const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int c) { return c >= 0; });
  };
  if (r.total_vehicle < 0 || !non_negative(r.ldpv) || !non_negative(r.hdv) ||
      !non_negative(r.stop_ldpv) || !non_negative(r.stop_hdv)) {
    throw Error(ErrorCode::kRangeError, "negative vehicle count");
  }
  if (!(r.his_humid >= 0.0 && r.his_humid <= 100.0)) {
    throw Error(ErrorCode::kRangeError,
                fmt::format("humidity {} outside [0, 100]", r.his_humid));
  }
  if (!(r.his_wind >= 0.0)) throw Error(ErrorCode::kRangeError, "negative wind speed");
  if (r.traffic && !(*r.traffic >= 0.0 && *r.traffic <= 1.0)) {
    throw Error(ErrorCode::kRangeError, "traffic ratio outside [0, 1]");
  }
  if (r.forecast && !(r.forecast->humidity >= 0.0 && r.forecast->humidity <= 100.0)) {
    throw Error(ErrorCode::kRangeError, "forecast humidity outside [0, 100]");
  }
}

std::vector<FeatureRow> parse_feature_rows(std::string_view input) {
  std::vector<FeatureRow> out;
  const auto trimmed = text::trim(input);
  if (trimmed.empty()) return out;
  if (trimmed.front() == '[') {
    json doc;
    try {
      doc = json::parse(trimmed);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRow, e.what());
    }
    std::size_t index = 0;
    for (const auto& obj : doc) out.push_back(row_from_json(obj, ++index));
    return out;
  }
  // A single (possibly multi-line) object.
  if (json single = json::parse(trimmed, nullptr, false); !single.is_discarded()) {
    out.push_back(row_from_json(single, 1));
    return out;
  }
  text::for_each_line(input, [&](std::string_view raw, std::size_t line) {
    const auto row = text::trim(raw);
    if (row.empty()) return;
    json obj;
    try {
      obj = json::parse(row);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRow, e.what(), line);
    }
    out.push_back(row_from_json(obj, line));
  });
  return out;
}

namespace {

ordered_json optional_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

}  // namespace

std::string serialize_feature_rows(std::span<const FeatureRow> rows) {
  ordered_json doc = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json o;
    o["Time"] = format_iso8601(r.timestamp);
    o["dataset"] = r.dataset;
    o["BC"] = optional_json(r.bc_raw);
    o["BC post"] = optional_json(r.bc_post);
    o["TotalVehicle"] = r.total_vehicle;
    for (std::size_t i = 0; i < r.lane_count(); ++i) {
      const auto k = i + 1;
      o[fmt::format("car_line{}", k)] = r.ldpv[i];
      o[fmt::format("truck_line{}", k)] = r.hdv[i];
      o[fmt::format("car_line{}_stop", k)] = r.stop_ldpv[i];
      o[fmt::format("truck_line{}_stop", k)] = r.stop_hdv[i];
    }
    o["traffic"] = optional_json(r.traffic);
    o["history_temperature"] = r.his_temp;
    o["history_wind_speed"] = r.his_wind;
    o["history_humidity"] = r.his_humid;
    if (r.forecast) {
      o["forecast_temperature"] = r.forecast->temperature;
      o["forecast_wind_speed"] = r.forecast->wind_speed;
      o["forecast_humidity"] = r.forecast->humidity;
    }
    doc.push_back(std::move(o));
  }
  return doc.dump(2) + "\n";
}

std::string serialize_feature_rows_csv(std::span<const FeatureRow> rows) {
  const std::size_t lanes = rows.empty() ? 0 : rows.front().lane_count();
  std::string out = "timestamp,dataset,TotalVehicle";
  for (const char* prefix : {"LDPV", "HDV", "StopLDPV", "StopHDV"}) {
    for (std::size_t k = 1; k <= lanes; ++k) out += fmt::format(",{}_{}", prefix, k);
  }
  out += ",his_temp,his_wind,his_humid,traffic,bc_raw,bc_post\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{}", *v) : std::string();
  };
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}", format_iso8601(r.timestamp), r.dataset, r.total_vehicle);
    for (const auto* v : {&r.ldpv, &r.hdv, &r.stop_ldpv, &r.stop_hdv}) {
      for (std::size_t k = 0; k < lanes; ++k) {
        out += fmt::format(",{}", k < v->size() ? (*v)[k] : 0);
      }
    }
    out += fmt::format(",{},{},{},{},{},{}\n", r.his_temp, r.his_wind, r.his_humid,
                       opt(r.traffic), opt(r.bc_raw), opt(r.bc_post));
  }
  return out;
}

}  // namespace bctrace
