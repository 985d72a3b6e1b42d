#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {
namespace {

double side(const Line& l, PixelPoint p) {
  return p.x * std::cos(l.theta) + p.y * std::sin(l.theta) - l.rho;
}

// Positive beyond the boundary as seen from the camera reference point.
double beyond(const Line& l, PixelPoint p, PixelPoint ref) {
  return side(l, ref) > 0.0 ? -side(l, p) : side(l, p);
}

}  // namespace

LaneGeometry select_lane_lines(std::span<const Line> lines, const LaneSelectConfig& cfg,
                               int image_width, int image_height) {
  std::vector<Line> cand;
  for (const auto& l : lines) {
    if (l.theta >= cfg.theta_min && l.theta <= cfg.theta_max) cand.push_back(l);
  }
  std::sort(cand.begin(), cand.end(), [](const Line& a, const Line& b) {
    return a.rho != b.rho ? a.rho < b.rho : a.theta < b.theta;
  });
  std::vector<Line> reps;
  for (std::size_t i = 0; i < cand.size();) {
    std::size_t j = i + 1;
    Line best = cand[i];
    while (j < cand.size() && cand[j].rho - cand[j - 1].rho < cfg.min_separation) {
      if (cand[j].votes > best.votes) best = cand[j];
      ++j;
    }
    reps.push_back(best);
    i = j;
  }
  if (reps.size() < 2) {
    throw Error(ErrorCode::kInsufficientLines,
                fmt::format("found {} lane boundaries, need at least 2", reps.size()));
  }
  LaneGeometry g;
  g.reference = PixelPoint{image_width / 2.0, static_cast<double>(image_height)};
  std::sort(reps.begin(), reps.end(), [&](const Line& a, const Line& b) {
    const double da = std::abs(side(a, g.reference));
    const double db = std::abs(side(b, g.reference));
    if (da != db) return da < db;
    return a.rho < b.rho;
  });
  g.boundaries = std::move(reps);
  return g;
}

std::optional<int> assign_lane(PixelPoint p, const LaneGeometry& geom) {
  const auto& b = geom.boundaries;
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    const double near = beyond(b[k], p, geom.reference);
    const double far = beyond(b[k + 1], p, geom.reference);
    const bool past_near = k == 0 ? near >= 0.0 : near > 0.0;
    if (past_near && far <= 0.0) return static_cast<int>(k + 1);
  }
  return std::nullopt;
}

std::string serialize_lane_geometry(const LaneGeometry& geom) {
  nlohmann::ordered_json j;
  j["reference"] = {geom.reference.x, geom.reference.y};
  j["boundaries"] = nlohmann::ordered_json::array();
  for (const auto& l : geom.boundaries) {
    j["boundaries"].push_back({{"rho", l.rho}, {"theta", l.theta}, {"votes", l.votes}});
  }
  return j.dump(2) + "\n";
}

LaneGeometry parse_lane_geometry(std::string_view json) {
  LaneGeometry g;
  try {
    const auto j = nlohmann::json::parse(json);
    const auto& ref = j.at("reference");
    g.reference = PixelPoint{ref.at(0).get<double>(), ref.at(1).get<double>()};
    for (const auto& b : j.at("boundaries")) {
      g.boundaries.push_back(Line{b.at("rho").get<double>(), b.at("theta").get<double>(),
                                  b.value("votes", 0)});
    }
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("lane geometry: {}", e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("lane geometry: {}", e.what()));
  }
  if (g.boundaries.size() < 2) {
    throw Error(ErrorCode::kInsufficientLines, "lane geometry needs at least 2 boundaries");
  }
  return g;
}

LaneGeometry detect_lanes(const GrayImage& frame, const LaneDetectionConfig& cfg) {
  const auto edges = canny(frame, cfg.canny);
  const auto lines = hough_lines(edges, cfg.rho_res, cfg.theta_res, cfg.vote_threshold);
  return select_lane_lines(lines, cfg.select, frame.width, frame.height);
}

}  // namespace bctrace::vision
