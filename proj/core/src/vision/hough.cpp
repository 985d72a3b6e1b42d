#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {

std::vector<Line> hough_lines(const GrayImage& edges, double rho_res, double theta_res,
                              int vote_threshold) {
  if (!(rho_res > 0.0) || !(theta_res > 0.0)) {
    throw Error(ErrorCode::kBadParams, "hough resolutions must be positive");
  }
  const int n_theta = static_cast<int>(std::ceil(std::numbers::pi / theta_res - 1e-9));
  const double diag = std::hypot(edges.width, edges.height);
  const int offset = static_cast<int>(std::ceil(diag / rho_res));
  const int n_rho = 2 * offset + 1;

  std::vector<double> cos_t(n_theta), sin_t(n_theta);
  for (int t = 0; t < n_theta; ++t) {
    cos_t[t] = std::cos(t * theta_res);
    sin_t[t] = std::sin(t * theta_res);
  }
  std::vector<int> acc(static_cast<std::size_t>(n_theta) * n_rho, 0);
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      if (edges.at(x, y) == 0) continue;
      for (int t = 0; t < n_theta; ++t) {
        const double rho = x * cos_t[t] + y * sin_t[t];
        const int r = static_cast<int>(std::lround(rho / rho_res)) + offset;
        ++acc[static_cast<std::size_t>(t) * n_rho + r];
      }
    }
  }

  auto votes = [&](int t, int r) {
    if (t < 0 || r < 0 || t >= n_theta || r >= n_rho) return -1;
    return acc[static_cast<std::size_t>(t) * n_rho + r];
  };
  std::vector<Line> out;
  for (int t = 0; t < n_theta; ++t) {
    for (int r = 0; r < n_rho; ++r) {
      const int v = votes(t, r);
      if (v <= vote_threshold) continue;
      bool peak = true;
      // Neighbours earlier in scan order must be strictly smaller so that a
      // flat-topped peak yields one line.
      for (int dt = -1; dt <= 1 && peak; ++dt) {
        for (int dr = -1; dr <= 1; ++dr) {
          if (dt == 0 && dr == 0) continue;
          const int nv = votes(t + dt, r + dr);
          const bool earlier = dt < 0 || (dt == 0 && dr < 0);
          if (earlier ? nv >= v : nv > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) out.push_back(Line{(r - offset) * rho_res, t * theta_res, v});
    }
  }
  std::sort(out.begin(), out.end(), [](const Line& a, const Line& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (a.theta != b.theta) return a.theta < b.theta;
    return a.rho < b.rho;
  });
  return out;
}

}  // namespace bctrace::vision
