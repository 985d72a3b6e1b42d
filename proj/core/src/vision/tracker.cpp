#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {
namespace {

double distance(PixelPoint a, PixelPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

ObjectClass class_from(const nlohmann::json& j) {
  const auto name = j.at("class").get<std::string>();
  const auto c = parse_object_class(name);
  if (!c) throw Error(ErrorCode::kUnknownClass, fmt::format("unknown object class '{}'", name));
  return *c;
}

}  // namespace

std::vector<Frame> parse_detections_json(std::string_view text) {
  std::vector<Frame> frames;
  try {
    const auto root = nlohmann::json::parse(text);
    const auto& arr = root.is_array() ? root : root.at("frames");
    frames.reserve(arr.size());
    for (const auto& f : arr) {
      Frame frame;
      frame.timestamp = f.at("t").get<double>();
      for (const auto& d : f.at("detections")) {
        FrameDetection det;
        det.object_class = class_from(d);
        if (d.contains("bbox")) {
          const auto& b = d.at("bbox");
          det.bbox = PixelRect{b.at(0).get<double>(), b.at(1).get<double>(),
                               b.at(2).get<double>(), b.at(3).get<double>()};
          det.centroid = det.bbox->center();
        } else {
          const auto& c = d.at("centroid");
          det.centroid = PixelPoint{c.at(0).get<double>(), c.at(1).get<double>()};
        }
        frame.detections.push_back(det);
      }
      frames.push_back(std::move(frame));
    }
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("detections: {}", e.what()));
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("detections: {}", e.what()));
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("detections: {}", e.what()));
  }
  return frames;
}

std::string serialize_detections_json(std::span<const Frame> frames) {
  std::string out = "{\"frames\": [\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    nlohmann::ordered_json f;
    f["t"] = frames[i].timestamp;
    f["detections"] = nlohmann::ordered_json::array();
    for (const auto& d : frames[i].detections) {
      nlohmann::ordered_json j;
      j["class"] = std::string(to_string(d.object_class));
      if (d.bbox) {
        j["bbox"] = {d.bbox->x, d.bbox->y, d.bbox->width, d.bbox->height};
      } else {
        j["centroid"] = {d.centroid.x, d.centroid.y};
      }
      f["detections"].push_back(std::move(j));
    }
    out += f.dump();
    out += i + 1 < frames.size() ? ",\n" : "\n";
  }
  out += "]}\n";
  return out;
}

void update_tracks(std::span<const FrameDetection> detections, TrackerState& state,
                   double timestamp, const TrackerConfig& cfg, const LaneGeometry* geom) {
  if (state.last_time && timestamp <= *state.last_time) {
    throw Error(ErrorCode::kOutOfOrderFrame,
                fmt::format("frame at {} does not follow {}", timestamp, *state.last_time));
  }
  state.last_time = timestamp;

  auto stale = [&](const Track& t) { return timestamp - t.history.back().t > cfg.max_age; };
  std::vector<Track> still_open;
  for (auto& t : state.open) {
    (stale(t) ? state.closed : still_open).push_back(std::move(t));
  }
  state.open = std::move(still_open);

  std::vector<std::tuple<double, std::int64_t, std::size_t, std::size_t>> pairs;
  for (std::size_t ti = 0; ti < state.open.size(); ++ti) {
    for (std::size_t di = 0; di < detections.size(); ++di) {
      const double d = distance(state.open[ti].history.back().c, detections[di].centroid);
      if (d <= cfg.max_distance) pairs.emplace_back(d, state.open[ti].track_id, ti, di);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<bool> track_used(state.open.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  for (const auto& [d, id, ti, di] : pairs) {
    if (track_used[ti] || det_used[di]) continue;
    track_used[ti] = det_used[di] = true;
    state.open[ti].history.push_back(TrackPoint{timestamp, detections[di].centroid});
  }
  for (std::size_t di = 0; di < detections.size(); ++di) {
    if (det_used[di]) continue;
    Track t;
    t.track_id = state.next_id++;
    t.object_class = detections[di].object_class;
    t.history.push_back(TrackPoint{timestamp, detections[di].centroid});
    if (geom) t.lane = assign_lane(detections[di].centroid, *geom);
    state.open.push_back(std::move(t));
  }
}

std::vector<Track> finish_tracks(TrackerState& state) {
  for (auto& t : state.open) state.closed.push_back(std::move(t));
  state.open.clear();
  std::vector<Track> all = std::move(state.closed);
  state.closed.clear();
  std::sort(all.begin(), all.end(),
            [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
  return all;
}

Track classify_stop(Track track, double speed_eps, double min_duration) {
  track.stop_intervals.clear();
  track.state = TrackState::kMoving;
  const auto& h = track.history;
  if (h.size() < 2) return track;
  std::optional<double> run_start;
  double run_end = 0.0;
  auto close_run = [&] {
    if (run_start && run_end - *run_start >= min_duration) {
      track.stop_intervals.emplace_back(*run_start, run_end);
    }
    run_start.reset();
  };
  bool last_slow = false;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    const double dt = h[i + 1].t - h[i].t;
    const double speed = distance(h[i].c, h[i + 1].c) / dt;
    last_slow = speed < speed_eps;
    if (last_slow) {
      if (!run_start) run_start = h[i].t;
      run_end = h[i + 1].t;
    } else {
      close_run();
    }
  }
  const bool ends_in_stop = last_slow && run_start && run_end - *run_start >= min_duration;
  close_run();
  if (ends_in_stop) track.state = TrackState::kStopped;
  return track;
}

std::vector<DetectionEvent> events_from_tracks(std::span<const Track> tracks) {
  std::vector<DetectionEvent> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) {
    if (t.history.empty()) continue;
    DetectionEvent e;
    e.object_class = t.object_class;
    e.lane = t.lane;
    e.track_id = t.track_id;
    e.timestamp = static_cast<UnixSeconds>(std::floor(t.history.front().t));
    e.centroid = t.history.front().c;
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.timestamp < b.timestamp;
  });
  return out;
}

}  // namespace bctrace::vision
