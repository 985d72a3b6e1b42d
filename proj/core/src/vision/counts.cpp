#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {

VehicleGroup group_of(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCar:
    case ObjectClass::kMotorcycle:
      return VehicleGroup::kLdpv;
    case ObjectClass::kTruck:
    case ObjectClass::kBus:
      return VehicleGroup::kHdv;
    default:
      return VehicleGroup::kExcluded;
  }
}

namespace {

struct Grid {
  UnixSeconds start = 0;
  std::int64_t bin = 30;
  std::size_t n = 0;
};

Grid make_grid(const CountOptions& opt, std::optional<UnixSeconds> lo,
               std::optional<UnixSeconds> hi) {
  if (opt.bin <= 0) throw Error(ErrorCode::kBadParams, "bin width must be positive");
  Grid g;
  g.bin = opt.bin;
  if (opt.start) {
    g.start = *opt.start;
  } else if (lo) {
    g.start = grid_index(*lo, 0, opt.bin) * opt.bin;
  } else {
    return g;
  }
  UnixSeconds end = g.start;
  if (opt.end) {
    end = *opt.end;
  } else if (hi) {
    end = (grid_index(*hi, g.start, opt.bin) + 1) * opt.bin + g.start;
  }
  if (end > g.start) g.n = static_cast<std::size_t>((end - g.start + opt.bin - 1) / opt.bin);
  return g;
}

CountReport empty_report(const Grid& g, const CountOptions& opt) {
  CountReport r;
  r.lane_count = opt.lane_count;
  r.bin = g.bin;
  r.bins.resize(g.n);
  for (std::size_t i = 0; i < g.n; ++i) {
    auto& b = r.bins[i];
    b.bin_start = g.start + static_cast<std::int64_t>(i) * g.bin;
    b.ldpv.assign(opt.lane_count, 0);
    b.hdv.assign(opt.lane_count, 0);
    b.stop_ldpv.assign(opt.lane_count, 0);
    b.stop_hdv.assign(opt.lane_count, 0);
  }
  return r;
}

bool lane_ok(const std::optional<int>& lane, std::size_t lane_count) {
  return lane && *lane >= 1 && static_cast<std::size_t>(*lane) <= lane_count;
}

// Tallies one vehicle first seen at `t`; returns false when it was not
// counted in a lane.
bool add_vehicle(CountReport& r, const Grid& g, ObjectClass c, const std::optional<int>& lane,
                 UnixSeconds t) {
  const auto group = group_of(c);
  if (group == VehicleGroup::kExcluded) {
    ++r.excluded[std::string(to_string(c))];
    return false;
  }
  if (!lane_ok(lane, r.lane_count)) {
    ++r.unknown_lane;
    return false;
  }
  const std::int64_t i = grid_index(t, g.start, g.bin);
  if (i < 0 || i >= static_cast<std::int64_t>(g.n)) {
    ++r.out_of_range;
    return false;
  }
  auto& b = r.bins[static_cast<std::size_t>(i)];
  const auto l = static_cast<std::size_t>(*lane - 1);
  (group == VehicleGroup::kLdpv ? b.ldpv : b.hdv)[l] += 1;
  b.total_vehicle += 1;
  return true;
}

}  // namespace

CountReport bin_counts(std::span<const DetectionEvent> events, const CountOptions& opt) {
  std::optional<UnixSeconds> lo, hi;
  for (const auto& e : events) {
    lo = lo ? std::min(*lo, e.timestamp) : e.timestamp;
    hi = hi ? std::max(*hi, e.timestamp) : e.timestamp;
  }
  const Grid g = make_grid(opt, lo, hi);
  CountReport r = empty_report(g, opt);
  for (const auto& e : events) add_vehicle(r, g, e.object_class, e.lane, e.timestamp);
  return r;
}

CountReport bin_counts(std::span<const Track> tracks, const CountOptions& opt) {
  std::optional<UnixSeconds> lo, hi;
  for (const auto& t : tracks) {
    if (t.history.empty()) continue;
    const auto first = static_cast<UnixSeconds>(std::floor(t.history.front().t));
    const auto last = static_cast<UnixSeconds>(std::floor(t.history.back().t));
    lo = lo ? std::min(*lo, first) : first;
    hi = hi ? std::max(*hi, last) : last;
  }
  const Grid g = make_grid(opt, lo, hi);
  CountReport r = empty_report(g, opt);
  for (const auto& t : tracks) {
    if (t.history.empty()) continue;
    const auto first = static_cast<UnixSeconds>(std::floor(t.history.front().t));
    add_vehicle(r, g, t.object_class, t.lane, first);
    const auto group = group_of(t.object_class);
    if (group == VehicleGroup::kExcluded || !lane_ok(t.lane, r.lane_count)) continue;
    std::set<std::size_t> stopped_bins;
    for (const auto& [s, e] : t.stop_intervals) {
      for (std::size_t i = 0; i < g.n; ++i) {
        const double b0 = static_cast<double>(r.bins[i].bin_start);
        if (s < b0 + static_cast<double>(g.bin) && e > b0) stopped_bins.insert(i);
      }
    }
    const auto l = static_cast<std::size_t>(*t.lane - 1);
    for (std::size_t i : stopped_bins) {
      (group == VehicleGroup::kLdpv ? r.bins[i].stop_ldpv : r.bins[i].stop_hdv)[l] += 1;
    }
  }
  return r;
}

std::string serialize_counts(const CountReport& report) {
  nlohmann::ordered_json j;
  j["lane_count"] = report.lane_count;
  j["bin_seconds"] = report.bin;
  j["unknown_lane"] = report.unknown_lane;
  j["out_of_range"] = report.out_of_range;
  j["excluded"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.excluded) j["excluded"][k] = v;
  j["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : report.bins) {
    j["bins"].push_back({{"bin_start", format_iso8601(b.bin_start)},
                         {"TotalVehicle", b.total_vehicle},
                         {"LDPV", b.ldpv},
                         {"HDV", b.hdv},
                         {"StopLDPV", b.stop_ldpv},
                         {"StopHDV", b.stop_hdv}});
  }
  return j.dump(1) + "\n";
}

CountReport parse_counts(std::string_view json) {
  CountReport r;
  try {
    const auto j = nlohmann::json::parse(json);
    r.lane_count = j.at("lane_count").get<std::size_t>();
    r.bin = j.value("bin_seconds", std::int64_t{30});
    r.unknown_lane = j.value("unknown_lane", std::size_t{0});
    r.out_of_range = j.value("out_of_range", std::size_t{0});
    if (j.contains("excluded")) {
      for (const auto& [k, v] : j.at("excluded").items()) r.excluded[k] = v.get<std::size_t>();
    }
    for (const auto& b : j.at("bins")) {
      BinCounts c;
      const auto ts = b.at("bin_start").get<std::string>();
      const auto t = parse_datetime(ts);
      if (!t) throw Error(ErrorCode::kMalformedRow, fmt::format("bad bin_start '{}'", ts));
      c.bin_start = *t;
      c.total_vehicle = b.at("TotalVehicle").get<int>();
      c.ldpv = b.at("LDPV").get<std::vector<int>>();
      c.hdv = b.at("HDV").get<std::vector<int>>();
      c.stop_ldpv = b.at("StopLDPV").get<std::vector<int>>();
      c.stop_hdv = b.at("StopHDV").get<std::vector<int>>();
      for (const auto* v : {&c.ldpv, &c.hdv, &c.stop_ldpv, &c.stop_hdv}) {
        if (v->size() != r.lane_count) {
          throw Error(ErrorCode::kSchemaMismatch, "per-lane count length differs from lane_count");
        }
      }
      r.bins.push_back(std::move(c));
    }
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("counts: {}", e.what()));
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("counts: {}", e.what()));
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("counts: {}", e.what()));
  }
  return r;
}

}  // namespace bctrace::vision
