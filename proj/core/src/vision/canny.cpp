#include <algorithm>
#include <cmath>
#include <vector>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {
namespace {

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

int clamp(int v, int hi) { return std::clamp(v, 0, hi - 1); }

}  // namespace

GrayImage canny(const GrayImage& img, double low, double high) {
  return canny(img, CannyConfig{low, high, 1.0});
}

GrayImage canny(const GrayImage& img, const CannyConfig& cfg) {
  if (cfg.low < 0.0 || cfg.low > cfg.high) {
    throw Error(ErrorCode::kBadThresholds, "canny thresholds must satisfy 0 <= low <= high");
  }
  const int w = img.width;
  const int h = img.height;
  GrayImage out(w, h, 0);
  if (w == 0 || h == 0) return out;

  // Separable blur with clamped borders: rows first, then columns.
  const auto kernel = gaussian_kernel(cfg.sigma);
  const int r = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  std::vector<double> smooth(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += kernel[i + r] * img.at(clamp(x + i, w), y);
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += kernel[i + r] * tmp[static_cast<std::size_t>(clamp(y + i, h)) * w + x];
      smooth[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  auto S = [&](int x, int y) { return smooth[static_cast<std::size_t>(clamp(y, h)) * w + clamp(x, w)]; };

  std::vector<double> mag(tmp.size());
  std::vector<std::uint8_t> dir(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (S(x + 1, y - 1) + 2 * S(x + 1, y) + S(x + 1, y + 1)) -
                        (S(x - 1, y - 1) + 2 * S(x - 1, y) + S(x - 1, y + 1));
      const double gy = (S(x - 1, y + 1) + 2 * S(x, y + 1) + S(x + 1, y + 1)) -
                        (S(x - 1, y - 1) + 2 * S(x, y - 1) + S(x + 1, y - 1));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      mag[i] = std::hypot(gx, gy);
      // Quantize the gradient direction to 0, 45, 90 or 135 degrees.
      double a = std::atan2(gy, gx) * 180.0 / 3.14159265358979323846;
      if (a < 0) a += 180.0;
      dir[i] = a < 22.5 || a >= 157.5 ? 0 : a < 67.5 ? 1 : a < 112.5 ? 2 : 3;
    }
  }
  auto M = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return mag[static_cast<std::size_t>(y) * w + x];
  };

  // Non-maximum suppression; strict on the backward neighbour so a plateau
  // two pixels wide keeps exactly one.
  static constexpr int kDx[4] = {1, 1, 0, -1};
  static constexpr int kDy[4] = {0, 1, 1, 1};
  std::vector<std::uint8_t> cls(tmp.size(), 0);  // 0 none, 1 weak, 2 strong
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const double m = mag[i];
      if (m < cfg.low || m == 0.0) continue;
      const int d = dir[i];
      if (!(m > M(x - kDx[d], y - kDy[d]) && m >= M(x + kDx[d], y + kDy[d]))) continue;
      cls[i] = m >= cfg.high ? 2 : 1;
    }
  }

  // Hysteresis: weak pixels survive when 8-connected to a strong one.
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (cls[i] == 2) {
      out.pixels[i] = 255;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
        if (cls[j] == 1 && out.pixels[j] == 0) {
          out.pixels[j] = 255;
          stack.push_back(j);
        }
      }
    }
  }
  return out;
}

}  // namespace bctrace::vision
