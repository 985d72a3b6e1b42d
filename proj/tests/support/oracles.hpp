#pragma once

// Reference implementations used by tests. Deliberately naive: O(N^2)
// transforms, per-bin rescans, factorial-time Shapley averaging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "bctrace/ingest.hpp"
#include "bctrace/model.hpp"
#include "bctrace/vision.hpp"

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(BCTRACE_TEST_DATA) / name;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("bctrace_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Direct summation.
struct NaiveSpectrum {
  std::vector<double> re, im;
};
inline NaiveSpectrum naive_dft(std::span<const double> x) {
  const std::size_t n = x.size();
  NaiveSpectrum s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      const double a = 2.0 * kPi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      s.re[k] += x[t] * std::cos(a);
      s.im[k] -= x[t] * std::sin(a);
    }
  }
  return s;
}

// <x, y delayed by d> / (|x| |y|), with the delay wrapping around.
inline double circular_cosine(std::span<const double> x, std::span<const double> y, std::int64_t d) {
  const auto n = static_cast<std::int64_t>(x.size());
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::int64_t t = 0; t < n; ++t) {
    const std::int64_t src = ((t - d) % n + n) % n;
    dot += x[static_cast<std::size_t>(t)] * y[static_cast<std::size_t>(src)];
    nx += x[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(t)];
    ny += y[static_cast<std::size_t>(t)] * y[static_cast<std::size_t>(t)];
  }
  return dot / std::sqrt(nx * ny);
}

// Argmax of the circular cross-correlation over the candidate delays; ties
// to the smallest |d|, then the smaller d.
inline std::int64_t xcorr_argmax(std::span<const double> x, std::span<const double> y,
                                 std::int64_t max_shift) {
  std::int64_t best = 0;
  double best_v = -2.0;
  for (std::int64_t d = -max_shift; d <= max_shift; ++d) {
    const double v = circular_cosine(x, y, d);
    const bool better = v > best_v + 1e-12 ||
                        (std::abs(v - best_v) <= 1e-12 &&
                         (std::abs(d) < std::abs(best) || (std::abs(d) == std::abs(best) && d < best)));
    if (better) {
      best = d;
      best_v = v;
    }
  }
  return best;
}

// Value of the cell containing t for every second in [from, to).
inline std::vector<double> hold_per_second(bctrace::UnixSeconds start, std::int64_t step,
                                           std::span<const double> values,
                                           bctrace::UnixSeconds from, bctrace::UnixSeconds to) {
  std::vector<double> out;
  for (bctrace::UnixSeconds t = from; t < to; ++t) {
    const std::int64_t d = t - start;
    const std::int64_t cell = d >= 0 ? d / step : -1;
    out.push_back(cell >= 0 && cell < static_cast<std::int64_t>(values.size())
                      ? values[static_cast<std::size_t>(cell)]
                      : std::nan(""));
  }
  return out;
}

inline std::vector<double> zscore(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  for (double& x : v) x = (x - mean) / sd;
  return v;
}

// Window sizes from a direct reading of the rule: a window opens at the
// first unassigned reading and runs until the ATN rise reaches delta, or
// stops short of an ATN drop.
inline std::vector<int> ona_window_sizes(std::span<const double> atn, std::span<const double> bc,
                                         double delta) {
  std::vector<int> sizes(atn.size(), 0);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < bc.size(); ++i) {
    if (!std::isnan(bc[i])) idx.push_back(i);
  }
  std::size_t a = 0;
  while (a < idx.size()) {
    std::size_t b = a;
    while (true) {
      if (atn[idx[b]] - atn[idx[a]] >= delta) break;
      if (b + 1 == idx.size()) break;
      if (atn[idx[b + 1]] < atn[idx[b]]) break;
      ++b;
    }
    for (std::size_t j = a; j <= b; ++j) sizes[idx[j]] = static_cast<int>(b - a + 1);
    a = b + 1;
  }
  return sizes;
}

// Per-bin rescan of first-seen events: every bin scans the whole stream.
struct RescanBin {
  int total = 0;
  std::vector<int> ldpv, hdv;
};
inline std::vector<RescanBin> rescan_counts(std::span<const bctrace::DetectionEvent> events,
                                            std::size_t lanes, std::int64_t bin,
                                            bctrace::UnixSeconds start, bctrace::UnixSeconds end) {
  std::vector<RescanBin> out;
  for (bctrace::UnixSeconds b = start; b < end; b += bin) {
    RescanBin r{0, std::vector<int>(lanes, 0), std::vector<int>(lanes, 0)};
    for (const auto& e : events) {
      if (e.timestamp < b || e.timestamp >= b + bin) continue;
      const auto c = e.object_class;
      const bool light = c == bctrace::ObjectClass::kCar || c == bctrace::ObjectClass::kMotorcycle;
      const bool heavy = c == bctrace::ObjectClass::kTruck || c == bctrace::ObjectClass::kBus;
      if (!light && !heavy) continue;
      if (!e.lane || *e.lane < 1 || static_cast<std::size_t>(*e.lane) > lanes) continue;
      ++r.total;
      (light ? r.ldpv : r.hdv)[static_cast<std::size_t>(*e.lane - 1)] += 1;
    }
    out.push_back(r);
  }
  return out;
}

// Interventional Shapley values by averaging marginal contributions over
// every feature ordering.
template <class Predict>
std::vector<double> permutation_shapley(Predict&& f, std::span<const double> x,
                                        const bctrace::model::Dataset& bg) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  auto value = [&](const std::vector<bool>& in) {
    double s = 0.0;
    std::vector<double> z(n);
    for (std::size_t r = 0; r < bg.rows(); ++r) {
      for (std::size_t i = 0; i < n; ++i) z[i] = in[i] ? x[i] : bg.at(r, i);
      s += f(std::span<const double>(z));
    }
    return s / static_cast<double>(bg.rows());
  };
  std::size_t perms = 0;
  do {
    std::vector<bool> in(n, false);
    double prev = value(in);
    for (std::size_t i : order) {
      in[i] = true;
      const double cur = value(in);
      phi[i] += cur - prev;
      prev = cur;
    }
    ++perms;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& p : phi) p /= static_cast<double>(perms);
  return phi;
}

// Draws the line x cos(theta) + y sin(theta) = rho by stepping along it.
inline void rasterize_line(bctrace::vision::GrayImage& img, double rho, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const double x0 = rho * c, y0 = rho * s;
  const double span = 2.0 * (img.width + img.height);
  for (double u = -span; u <= span; u += 0.25) {
    const int x = static_cast<int>(std::lround(x0 - u * s));
    const int y = static_cast<int>(std::lround(y0 + u * c));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.at(x, y) = 255;
  }
}

// Signed side of p against a boundary line.
inline double side(const bctrace::vision::Line& l, bctrace::PixelPoint p) {
  return p.x * std::cos(l.theta) + p.y * std::sin(l.theta) - l.rho;
}

}  // namespace oracle
