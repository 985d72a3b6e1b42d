#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bctrace/ingest.hpp"

namespace bctrace::vision {

// 8-bit grayscale, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

// Binary PGM (P5), maxval <= 255.
GrayImage parse_pgm(std::string_view bytes);
std::string serialize_pgm(const GrayImage& img);

// Gaussian smoothing, Sobel gradients, non-maximum suppression and
// hysteresis. Output pixels are 0 or 255.
struct CannyConfig {
  double low = 40.0;
  double high = 100.0;
  double sigma = 1.0;
};
GrayImage canny(const GrayImage& img, const CannyConfig& cfg);
GrayImage canny(const GrayImage& img, double low, double high);

// Normal form x cos(theta) + y sin(theta) = rho with image y pointing down.
struct Line {
  double rho = 0.0;
  double theta = 0.0;  // [0, pi)
  int votes = 0;
  bool operator==(const Line&) const = default;
};

// Standard accumulator; returns local maxima with more than
// `vote_threshold` votes, by votes descending (then theta, rho).
std::vector<Line> hough_lines(const GrayImage& edges, double rho_res, double theta_res,
                              int vote_threshold);

struct LaneGeometry {
  std::vector<Line> boundaries;  // nearest the camera first
  PixelPoint reference;          // bottom-centre of the frame
  std::size_t lane_count() const { return boundaries.empty() ? 0 : boundaries.size() - 1; }
};

struct LaneSelectConfig {
  double theta_min = 1.3962634015954636;  // 80 deg
  double theta_max = 1.7453292519943295;  // 100 deg
  double min_separation = 15.0;           // pixels of rho
};

LaneGeometry select_lane_lines(std::span<const Line> lines, const LaneSelectConfig& cfg,
                               int image_width, int image_height);

// 1-based lane whose strip contains p; a point on a boundary belongs to the
// lane nearer the camera. nullopt outside the road.
std::optional<int> assign_lane(PixelPoint p, const LaneGeometry& geom);

std::string serialize_lane_geometry(const LaneGeometry& geom);
LaneGeometry parse_lane_geometry(std::string_view json);

struct LaneDetectionConfig {
  CannyConfig canny;
  double rho_res = 1.0;
  double theta_res = 3.14159265358979323846 / 180.0;
  int vote_threshold = 150;
  LaneSelectConfig select;
};
LaneGeometry detect_lanes(const GrayImage& frame, const LaneDetectionConfig& cfg);

// One box (or bare centroid) from the detector for a single frame.
struct FrameDetection {
  ObjectClass object_class = ObjectClass::kCar;
  PixelPoint centroid;
  std::optional<PixelRect> bbox;
};

struct Frame {
  double timestamp = 0.0;  // UTC seconds, fractional
  std::vector<FrameDetection> detections;
};

// {"frames": [{"t": ..., "detections": [{"class": "car", "bbox": [x, y, w, h]}
// or {"class": "car", "centroid": [x, y]}]}]}. The centroid of a box is its
// centre.
std::vector<Frame> parse_detections_json(std::string_view text);
std::string serialize_detections_json(std::span<const Frame> frames);

struct TrackPoint {
  double t = 0.0;
  PixelPoint c;
};

enum class TrackState { kMoving, kStopped };

struct Track {
  std::int64_t track_id = 0;
  ObjectClass object_class = ObjectClass::kCar;
  std::vector<TrackPoint> history;
  std::optional<int> lane;
  TrackState state = TrackState::kMoving;
  std::vector<std::pair<double, double>> stop_intervals;
};

struct TrackerConfig {
  double max_distance = 30.0;  // pixels
  double max_age = 1.0;        // seconds unseen before a track closes
};

struct TrackerState {
  std::vector<Track> open;
  std::vector<Track> closed;
  std::int64_t next_id = 1;
  std::optional<double> last_time;
};

// Greedy association: candidate (track, detection) pairs within the gate are
// taken in order of increasing distance. New tracks get their lane from
// `geom` when one is given.
void update_tracks(std::span<const FrameDetection> detections, TrackerState& state,
                   double timestamp, const TrackerConfig& cfg,
                   const LaneGeometry* geom = nullptr);

// Closes every open track; returns all tracks ordered by id.
std::vector<Track> finish_tracks(TrackerState& state);

// Speed between consecutive history points; maximal runs below speed_eps
// lasting at least min_duration seconds become stop intervals.
Track classify_stop(Track track, double speed_eps, double min_duration = 4.0);

// First-seen records (timestamp floored to whole seconds).
std::vector<DetectionEvent> events_from_tracks(std::span<const Track> tracks);

enum class VehicleGroup { kLdpv, kHdv, kExcluded };
VehicleGroup group_of(ObjectClass c);

struct BinCounts {
  UnixSeconds bin_start = 0;
  int total_vehicle = 0;
  std::vector<int> ldpv;
  std::vector<int> hdv;
  std::vector<int> stop_ldpv;
  std::vector<int> stop_hdv;
  bool operator==(const BinCounts&) const = default;
};

struct CountOptions {
  std::size_t lane_count = 2;
  std::int64_t bin = 30;
  // Grid bounds; default to the epoch-aligned bins spanning the input.
  std::optional<UnixSeconds> start;
  std::optional<UnixSeconds> end;
};

struct CountReport {
  std::size_t lane_count = 0;
  std::int64_t bin = 30;
  std::vector<BinCounts> bins;
  std::size_t out_of_range = 0;  // vehicles first seen outside the grid
  std::size_t unknown_lane = 0;  // vehicles without a usable lane
  std::map<std::string, std::size_t> excluded;  // by class name
};

CountReport bin_counts(std::span<const DetectionEvent> events, const CountOptions& opt);
// Stop tallies need tracks; each track counts once at its first point.
CountReport bin_counts(std::span<const Track> tracks, const CountOptions& opt);

std::string serialize_counts(const CountReport& report);
CountReport parse_counts(std::string_view json);

}  // namespace bctrace::vision
