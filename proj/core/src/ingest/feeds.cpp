#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/ingest.hpp"
#include "text.hpp"

namespace bctrace {
namespace {

bool looks_like_json(std::string_view s) {
  s = text::trim(s);
  return !s.empty() && (s.front() == '[' || s.front() == '{');
}

std::optional<UnixSeconds> timestamp_from_text(std::string_view s) {
  s = text::trim(s);
  if (auto t = parse_datetime(s)) return t;
  if (auto v = text::to_int(s)) return *v;
  return std::nullopt;
}

// A parsed feed row: column name -> raw cell.
using Record = std::map<std::string, std::string, std::less<>>;

std::vector<std::pair<Record, std::size_t>> read_records(std::string_view input) {
  std::vector<std::pair<Record, std::size_t>> out;
  if (looks_like_json(input)) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(input);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRow, e.what());
    }
    if (doc.is_object()) doc = nlohmann::json::array({doc});
    std::size_t index = 0;
    for (const auto& item : doc) {
      ++index;
      if (!item.is_object()) {
        throw Error(ErrorCode::kMalformedRow, "feed entry is not an object", index);
      }
      Record r;
      for (const auto& [k, v] : item.items()) {
        r[k] = v.is_string() ? v.get<std::string>() : v.dump();
      }
      out.emplace_back(std::move(r), index);
    }
    return out;
  }
  std::vector<std::string> header;
  text::for_each_line(input, [&](std::string_view raw, std::size_t line) {
    const auto row = text::trim(raw);
    if (row.empty()) return;
    const auto fields = text::split(row, ',');
    if (header.empty()) {
      for (auto f : fields) header.emplace_back(text::trim(f));
      return;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::kMalformedRow,
                  fmt::format("expected {} columns, got {}", header.size(),
                              fields.size()),
                  line);
    }
    Record r;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      r[header[i]] = std::string(text::trim(fields[i]));
    }
    out.emplace_back(std::move(r), line);
  });
  return out;
}

const std::string& field(const Record& r, std::string_view key, std::size_t line) {
  auto it = r.find(key);
  if (it == r.end()) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("missing field '{}'", key),
                line);
  }
  return it->second;
}

double number(const Record& r, std::string_view key, std::size_t line) {
  auto v = text::to_double(field(r, key, line));
  if (!v) {
    throw Error(ErrorCode::kMalformedRow,
                fmt::format("field '{}' is not a number", key), line);
  }
  return *v;
}

UnixSeconds stamp(const Record& r, std::size_t line) {
  auto t = timestamp_from_text(field(r, "timestamp", line));
  if (!t) throw Error(ErrorCode::kMalformedRow, "bad timestamp", line);
  return *t;
}

}  // namespace

std::vector<WeatherSample> parse_weather(std::string_view input) {
  std::vector<WeatherSample> out;
  for (const auto& [r, line] : read_records(input)) {
    WeatherSample w;
    w.timestamp = stamp(r, line);
    w.temperature = number(r, "temperature", line);
    w.wind_speed = number(r, "wind_speed", line);
    w.humidity = number(r, "humidity", line);
    if (auto it = r.find("kind"); it != r.end()) {
      if (text::iequals(it->second, "forecast")) {
        w.kind = WeatherKind::kForecast;
      } else if (!text::iequals(it->second, "historical")) {
        throw Error(ErrorCode::kMalformedRow,
                    fmt::format("unknown weather kind '{}'", it->second), line);
      }
    }
    if (w.humidity < 0.0 || w.humidity > 100.0) {
      throw Error(ErrorCode::kRangeError, "humidity outside [0, 100]", line);
    }
    if (w.wind_speed < 0.0) {
      throw Error(ErrorCode::kRangeError, "negative wind speed", line);
    }
    out.push_back(w);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::string serialize_weather_csv(std::span<const WeatherSample> samples) {
  std::string out = "timestamp,temperature,wind_speed,humidity,kind\n";
  for (const auto& w : samples) {
    out += fmt::format("{},{},{},{},{}\n", format_iso8601(w.timestamp),
                       w.temperature, w.wind_speed, w.humidity,
                       w.kind == WeatherKind::kForecast ? "forecast" : "historical");
  }
  return out;
}

std::vector<TrafficDensitySample> parse_traffic(std::string_view input) {
  std::vector<TrafficDensitySample> out;
  for (const auto& [r, line] : read_records(input)) {
    TrafficDensitySample t;
    t.timestamp = stamp(r, line);
    t.ratio = number(r, "ratio", line);
    if (t.ratio < 0.0 || t.ratio > 1.0) {
      throw Error(ErrorCode::kRangeError, "traffic ratio outside [0, 1]", line);
    }
    out.push_back(t);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::string serialize_traffic_csv(std::span<const TrafficDensitySample> samples) {
  std::string out = "timestamp,ratio\n";
  for (const auto& t : samples) {
    out += fmt::format("{},{}\n", format_iso8601(t.timestamp), t.ratio);
  }
  return out;
}

}  // namespace bctrace
