#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/session.hpp"

namespace bctrace {
namespace {

using ojson = nlohmann::ordered_json;
constexpr std::string_view kSchema = "bctrace.session/1";

ojson number_or_null(double v) { return is_missing(v) ? ojson() : ojson(v); }

double number_or_nan(const nlohmann::json& j) { return j.is_null() ? kMissing : j.get<double>(); }

ojson series_json(const BcSeries& s) {
  ojson j;
  j["start"] = format_iso8601(s.start);
  j["step"] = s.step;
  j["values"] = ojson::array();
  j["atn"] = ojson::array();
  for (double v : s.values) j["values"].push_back(number_or_null(v));
  for (double v : s.atn) j["atn"].push_back(number_or_null(v));
  return j;
}

UnixSeconds time_field(const nlohmann::json& j, const char* key) {
  const auto text = j.at(key).get<std::string>();
  const auto t = parse_datetime(text);
  if (!t) throw Error(ErrorCode::kMalformedRow, fmt::format("bad timestamp '{}' in '{}'", text, key));
  return *t;
}

BcSeries series_from(const nlohmann::json& j) {
  BcSeries s;
  s.start = time_field(j, "start");
  s.step = j.at("step").get<std::int64_t>();
  for (const auto& v : j.at("values")) s.values.push_back(number_or_nan(v));
  for (const auto& v : j.at("atn")) s.atn.push_back(number_or_nan(v));
  if (s.values.size() != s.atn.size()) throw Error(ErrorCode::kSchemaMismatch, "series values/atn lengths differ");
  return s;
}

}  // namespace

std::string session_to_json(const Session& s) {
  ojson j;
  j["schema"] = kSchema;
  j["label"] = s.label;
  j["samples"] = ojson::array();
  for (const auto& b : s.samples) {
    j["samples"].push_back({{"t", format_iso8601(b.timestamp)},
                            {"ref", b.ref_count},
                            {"sen", b.sen_count},
                            {"atn", b.atn},
                            {"flow", b.flow},
                            {"pcb_temp", b.pcb_temp},
                            {"status", b.status},
                            {"battery", b.battery},
                            {"bc", b.bc_raw ? ojson(*b.bc_raw) : ojson()},
                            {"ona_pts", b.ona_pts ? ojson(*b.ona_pts) : ojson()}});
  }
  j["bc_raw"] = series_json(s.bc_raw);
  j["bc_post"] = s.bc_post ? series_json(*s.bc_post) : ojson();
  j["ona_window_sizes"] = s.ona_window_sizes;
  j["ona_delta"] = s.ona_delta ? ojson(*s.ona_delta) : ojson();
  j["events"] = ojson::array();
  for (const auto& e : s.events) {
    ojson ev{{"class", to_string(e.object_class)},
             {"lane", e.lane ? ojson(*e.lane) : ojson()},
             {"track_id", e.track_id},
             {"t", format_iso8601(e.timestamp)}};
    if (e.centroid) ev["centroid"] = {e.centroid->x, e.centroid->y};
    if (e.bbox) ev["bbox"] = {e.bbox->x, e.bbox->y, e.bbox->width, e.bbox->height};
    j["events"].push_back(std::move(ev));
  }
  j["weather"] = ojson::array();
  for (const auto& w : s.weather) {
    j["weather"].push_back({{"t", format_iso8601(w.timestamp)},
                            {"temperature", w.temperature},
                            {"wind_speed", w.wind_speed},
                            {"humidity", w.humidity},
                            {"kind", w.kind == WeatherKind::kHistorical ? "historical" : "forecast"}});
  }
  j["traffic"] = ojson::array();
  for (const auto& t : s.traffic) j["traffic"].push_back({{"t", format_iso8601(t.timestamp)}, {"ratio", t.ratio}});
  if (s.alignment) {
    j["alignment"] = {{"shift", s.alignment->shift},
                      {"max_similarity", s.alignment->max_similarity},
                      {"max_shift", s.alignment->max_shift}};
  } else {
    j["alignment"] = nullptr;
  }
  return j.dump(1) + "\n";
}

Session session_from_json(std::string_view text) {
  Session s;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("schema", std::string()) != kSchema) {
      throw Error(ErrorCode::kSchemaMismatch, fmt::format("expected schema '{}'", kSchema));
    }
    s.label = j.at("label").get<std::string>();
    for (const auto& b : j.at("samples")) {
      BcSample x;
      x.timestamp = time_field(b, "t");
      x.ref_count = b.at("ref").get<std::int64_t>();
      x.sen_count = b.at("sen").get<std::int64_t>();
      x.atn = b.at("atn").get<double>();
      x.flow = b.at("flow").get<double>();
      x.pcb_temp = b.at("pcb_temp").get<double>();
      x.status = b.at("status").get<int>();
      x.battery = b.at("battery").get<double>();
      if (!b.at("bc").is_null()) x.bc_raw = b.at("bc").get<double>();
      if (!b.at("ona_pts").is_null()) x.ona_pts = b.at("ona_pts").get<int>();
      s.samples.push_back(x);
    }
    s.bc_raw = series_from(j.at("bc_raw"));
    if (!j.at("bc_post").is_null()) s.bc_post = series_from(j.at("bc_post"));
    s.ona_window_sizes = j.at("ona_window_sizes").get<std::vector<int>>();
    if (!j.at("ona_delta").is_null()) s.ona_delta = j.at("ona_delta").get<double>();
    for (const auto& e : j.at("events")) {
      DetectionEvent ev;
      const auto cls = e.at("class").get<std::string>();
      const auto c = parse_object_class(cls);
      if (!c) throw Error(ErrorCode::kUnknownClass, fmt::format("unknown class '{}'", cls));
      ev.object_class = *c;
      if (!e.at("lane").is_null()) ev.lane = e.at("lane").get<int>();
      ev.track_id = e.at("track_id").get<std::int64_t>();
      ev.timestamp = time_field(e, "t");
      if (e.contains("centroid")) {
        const auto p = e.at("centroid").get<std::vector<double>>();
        if (p.size() != 2) throw Error(ErrorCode::kSchemaMismatch, "centroid needs 2 numbers");
        ev.centroid = PixelPoint{p[0], p[1]};
      }
      if (e.contains("bbox")) {
        const auto r = e.at("bbox").get<std::vector<double>>();
        if (r.size() != 4) throw Error(ErrorCode::kSchemaMismatch, "bbox needs 4 numbers");
        ev.bbox = PixelRect{r[0], r[1], r[2], r[3]};
      }
      s.events.push_back(ev);
    }
    for (const auto& w : j.at("weather")) {
      WeatherSample x;
      x.timestamp = time_field(w, "t");
      x.temperature = w.at("temperature").get<double>();
      x.wind_speed = w.at("wind_speed").get<double>();
      x.humidity = w.at("humidity").get<double>();
      x.kind = w.value("kind", std::string("historical")) == "forecast" ? WeatherKind::kForecast
                                                                         : WeatherKind::kHistorical;
      s.weather.push_back(x);
    }
    for (const auto& t : j.at("traffic")) {
      s.traffic.push_back(TrafficDensitySample{time_field(t, "t"), t.at("ratio").get<double>()});
    }
    if (j.contains("alignment") && !j.at("alignment").is_null()) {
      const auto& a = j.at("alignment");
      s.alignment = SessionAlignment{a.at("shift").get<std::int64_t>(), a.at("max_similarity").get<double>(),
                                     a.at("max_shift").get<std::int64_t>()};
    }
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("session: {}", e.what()));
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("session: {}", e.what()));
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("session: {}", e.what()));
  }
  return s;
}

Session make_session(std::vector<BcSample> samples, std::vector<DetectionEvent> events,
                     std::vector<WeatherSample> weather, std::vector<TrafficDensitySample> traffic,
                     std::string label) {
  Session s;
  s.label = std::move(label);
  s.bc_raw = resample_to_grid(samples, 30);
  s.samples = std::move(samples);
  s.events = std::move(events);
  s.weather = std::move(weather);
  s.traffic = std::move(traffic);
  return s;
}

align::GridSeries activity_from_events(std::span<const DetectionEvent> events, std::int64_t bin) {
  if (bin <= 0) throw Error(ErrorCode::kBadParams, "bin must be positive");
  align::GridSeries g;
  g.step = bin;
  std::optional<UnixSeconds> lo, hi;
  for (const auto& e : events) {
    if (vision::group_of(e.object_class) == vision::VehicleGroup::kExcluded) continue;
    lo = lo ? std::min(*lo, e.timestamp) : e.timestamp;
    hi = hi ? std::max(*hi, e.timestamp) : e.timestamp;
  }
  if (!lo) throw Error(ErrorCode::kEmptyInput, "no vehicle events to build an activity series");
  g.start = grid_index(*lo, 0, bin) * bin;
  const auto n = static_cast<std::size_t>(grid_index(*hi, g.start, bin) + 1);
  g.values.assign(n, 0.0);
  for (const auto& e : events) {
    if (vision::group_of(e.object_class) == vision::VehicleGroup::kExcluded) continue;
    g.values[static_cast<std::size_t>(grid_index(e.timestamp, g.start, bin))] += 1.0;
  }
  return g;
}

align::GridSeries activity_from_counts(const vision::CountReport& counts) {
  if (counts.bins.empty()) throw Error(ErrorCode::kEmptyInput, "no count bins");
  align::GridSeries g;
  g.start = counts.bins.front().bin_start;
  g.step = counts.bin;
  for (const auto& b : counts.bins) {
    double v = b.total_vehicle;
    for (std::size_t l = 0; l < b.stop_ldpv.size(); ++l) v += b.stop_ldpv[l] + b.stop_hdv[l];
    g.values.push_back(v);
  }
  return g;
}

}  // namespace bctrace
