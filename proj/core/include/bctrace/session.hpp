#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctrace/align.hpp"
#include "bctrace/ingest.hpp"
#include "bctrace/vision.hpp"

namespace bctrace {

struct SessionAlignment {
  std::int64_t shift = 0;  // seconds; BC timestamps moved this much earlier
  double max_similarity = 0.0;
  std::int64_t max_shift = 0;
};

// Everything one monitoring session carries between pipeline stages.
struct Session {
  std::string label = "session";
  std::vector<BcSample> samples;
  BcSeries bc_raw;  // 30 s grid of the AE51 readings
  std::optional<BcSeries> bc_post;  // after ONA, then alignment
  std::vector<int> ona_window_sizes;
  std::optional<double> ona_delta;
  std::vector<DetectionEvent> events;
  std::vector<WeatherSample> weather;
  std::vector<TrafficDensitySample> traffic;
  std::optional<SessionAlignment> alignment;
};

// "bctrace.session/1" JSON. NaN cells are written as null.
std::string session_to_json(const Session& s);
Session session_from_json(std::string_view text);

// Builds a session from the ingest inputs; bc_raw is gridded at 30 s.
Session make_session(std::vector<BcSample> samples, std::vector<DetectionEvent> events,
                     std::vector<WeatherSample> weather, std::vector<TrafficDensitySample> traffic,
                     std::string label);

// Vehicles (LDPV + HDV, any lane) per epoch-aligned bin, spanning the
// events. Used as the activity series when no counts are available.
align::GridSeries activity_from_events(std::span<const DetectionEvent> events,
                                       std::int64_t bin = 30);
// Per bin: vehicles first seen plus vehicles stopped (idling counts as
// activity), all lanes.
align::GridSeries activity_from_counts(const vision::CountReport& counts);

}  // namespace bctrace
