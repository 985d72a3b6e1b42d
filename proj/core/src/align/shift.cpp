#include <algorithm>
#include <cmath>
#include <cstdlib>

#include <fmt/format.h>

#include "bctrace/align.hpp"
#include "bctrace/error.hpp"

namespace bctrace::align {
namespace {

using cd = std::complex<double>;

// Hold each cell's value over [common_start, common_start + n * step).
std::vector<double> hold_resample(const GridSeries& s, UnixSeconds from,
                                  std::size_t n, std::int64_t step) {
  std::vector<double> out(n, kMissing);
  for (std::size_t i = 0; i < n; ++i) {
    const UnixSeconds t = from + static_cast<std::int64_t>(i) * step;
    const std::int64_t cell = grid_index(t, s.start, s.step);
    if (cell >= 0 && cell < static_cast<std::int64_t>(s.values.size())) {
      out[i] = s.values[static_cast<std::size_t>(cell)];
    }
  }
  return out;
}

void impute_and_standardize(std::vector<double>& v, const char* which) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (!is_missing(x)) {
      sum += x;
      ++n;
    }
  }
  if (n == 0) {
    throw Error(ErrorCode::kZeroNorm, fmt::format("{} series has no values in the overlap", which));
  }
  const double mean = sum / static_cast<double>(n);
  for (double& x : v) {
    if (is_missing(x)) x = mean;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size()));
  if (!(sd > 0.0)) {
    throw Error(ErrorCode::kZeroNorm, fmt::format("{} series is constant over the overlap", which));
  }
  for (double& x : v) x = (x - mean) / sd;
}

}  // namespace

GridSeries to_grid_series(const BcSeries& series) {
  return GridSeries{series.start, series.step, series.values};
}

ShiftSearchConfig ShiftSearchConfig::symmetric(std::int64_t max_shift,
                                               std::int64_t resample_step) {
  if (max_shift < 0 || resample_step <= 0) {
    throw Error(ErrorCode::kBadParams, "max shift must be >= 0 and step > 0");
  }
  ShiftSearchConfig cfg;
  cfg.resample_step = resample_step;
  const std::int64_t k = max_shift / resample_step;
  for (std::int64_t i = -k; i <= k; ++i) cfg.candidate_shifts.push_back(i * resample_step);
  return cfg;
}

std::vector<double> circular_similarity(std::span<const double> x,
                                        std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "signals differ in length");
  if (x.empty()) throw Error(ErrorCode::kEmptyInput, "empty signals");
  const std::size_t n = x.size();
  std::vector<cd> fx(x.begin(), x.end());
  std::vector<cd> fy(y.begin(), y.end());
  fft(fx, false);
  fft(fy, false);
  double xx = 0.0, yy = 0.0;
  std::vector<cd> cross(n);
  for (std::size_t k = 0; k < n; ++k) {
    xx += std::norm(fx[k]);
    yy += std::norm(fy[k]);
    cross[k] = fx[k] * std::conj(fy[k]);
  }
  if (xx == 0.0 || yy == 0.0) {
    throw Error(ErrorCode::kZeroNorm, "cosine similarity of an all-zero spectrum");
  }
  // Delaying y by d multiplies Y[k] by exp(-j 2 pi k d / N); the numerator
  // for every d is then one inverse transform of X conj(Y).
  fft(cross, true);
  const double denom = std::sqrt(xx) * std::sqrt(yy);
  std::vector<double> out(n);
  for (std::size_t d = 0; d < n; ++d) out[d] = cross[d].real() / denom;
  return out;
}

AlignmentResult search_shift(std::span<const double> x, std::span<const double> y,
                             std::span<const std::int64_t> candidate_shifts) {
  if (candidate_shifts.empty()) throw Error(ErrorCode::kBadParams, "no candidate shifts");
  const auto curve = circular_similarity(x, y);
  const auto n = static_cast<std::int64_t>(curve.size());
  AlignmentResult out;
  out.similarity_curve.reserve(candidate_shifts.size());
  bool first = true;
  for (const std::int64_t d : candidate_shifts) {
    if (std::abs(d) >= n) {
      throw Error(ErrorCode::kBadParams,
                  fmt::format("candidate shift {} exceeds signal length {}", d, n));
    }
    const double c = curve[static_cast<std::size_t>(((d % n) + n) % n)];
    out.similarity_curve.emplace_back(d, c);
    const bool better =
        first || c > out.max_similarity ||
        (c == out.max_similarity &&
         (std::abs(d) < std::abs(out.optimal_shift) ||
          (std::abs(d) == std::abs(out.optimal_shift) && d < out.optimal_shift)));
    if (better) {
      out.optimal_shift = d;
      out.max_similarity = c;
      first = false;
    }
  }
  return out;
}

AlignmentResult find_optimal_shift(const GridSeries& x, const GridSeries& y,
                                   const ShiftSearchConfig& cfg) {
  if (cfg.candidate_shifts.empty()) throw Error(ErrorCode::kBadParams, "no candidate shifts");
  if (cfg.resample_step <= 0 || x.step <= 0 || y.step <= 0) {
    throw Error(ErrorCode::kBadParams, "steps must be positive");
  }
  std::int64_t max_abs = 0;
  for (auto d : cfg.candidate_shifts) {
    if (d % cfg.resample_step != 0) {
      throw Error(ErrorCode::kBadParams,
                  fmt::format("shift {} is not a multiple of the resample step", d));
    }
    max_abs = std::max<std::int64_t>(max_abs, std::abs(d));
  }
  const UnixSeconds from = std::max(x.start, y.start);
  const UnixSeconds to = std::min(x.end(), y.end());
  const std::int64_t overlap = to - from;
  if (overlap <= 0 || overlap < 4 * max_abs) {
    throw Error(ErrorCode::kInsufficientOverlap,
                fmt::format("common interval {} s is shorter than 4 x {} s", overlap, max_abs));
  }
  const auto n = static_cast<std::size_t>(overlap / cfg.resample_step);
  auto xs = hold_resample(x, from, n, cfg.resample_step);
  auto ys = hold_resample(y, from, n, cfg.resample_step);
  impute_and_standardize(xs, "BC");
  impute_and_standardize(ys, "activity");

  std::vector<std::int64_t> in_samples;
  in_samples.reserve(cfg.candidate_shifts.size());
  for (auto d : cfg.candidate_shifts) in_samples.push_back(d / cfg.resample_step);
  AlignmentResult r = search_shift(xs, ys, in_samples);
  r.optimal_shift *= cfg.resample_step;
  for (auto& [d, c] : r.similarity_curve) d *= cfg.resample_step;
  return r;
}

BcSeries apply_shift(const BcSeries& series, std::int64_t shift) {
  const std::int64_t duration = series.end() - series.start;
  if (std::abs(shift) >= duration) {
    throw Error(ErrorCode::kShiftTooLarge,
                fmt::format("shift {} s is not shorter than the series ({} s)", shift, duration));
  }
  BcSeries out = series;
  out.start -= shift;
  return out;
}

GridSeries apply_shift(const GridSeries& series, std::int64_t shift) {
  const std::int64_t duration = series.end() - series.start;
  if (std::abs(shift) >= duration) {
    throw Error(ErrorCode::kShiftTooLarge,
                fmt::format("shift {} s is not shorter than the series ({} s)", shift, duration));
  }
  GridSeries out = series;
  out.start -= shift;
  return out;
}

std::string similarity_curve_csv(const AlignmentResult& result) {
  std::string out = "shift_s,cosine_similarity\n";
  for (const auto& [d, c] : result.similarity_curve) out += fmt::format("{},{}\n", d, c);
  return out;
}

}  // namespace bctrace::align
