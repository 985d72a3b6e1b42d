#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bctrace/ingest.hpp"

namespace bctrace::align {

// DFT split into its cosine and sine projections:
//   cos_part[k] =  sum_n x[n] cos(2 pi k n / N)
//   sin_part[k] = -sum_n x[n] sin(2 pi k n / N)
struct Spectrum {
  std::vector<double> cos_part;
  std::vector<double> sin_part;
  std::size_t size() const { return cos_part.size(); }
};

// O(N log N) for any N (radix-2, Bluestein for other lengths).
Spectrum dft(std::span<const double> signal);

// In-place complex FFT; `inverse` applies the conjugate kernel without the
// 1/N factor.
void fft(std::vector<std::complex<double>>& data, bool inverse);

// (<Xc,Yc> + <Xs,Ys>) / (sqrt(|Xc|^2 + |Xs|^2) * sqrt(|Yc|^2 + |Ys|^2)).
double phase_cosine_similarity(const Spectrum& x, const Spectrum& y);

// Uniformly sampled values on an absolute time grid; NaN marks a gap.
struct GridSeries {
  UnixSeconds start = 0;
  std::int64_t step = 1;
  std::vector<double> values;

  UnixSeconds end() const {
    return start + static_cast<std::int64_t>(values.size()) * step;
  }
};

GridSeries to_grid_series(const BcSeries& series);

struct ShiftSearchConfig {
  std::vector<std::int64_t> candidate_shifts;  // seconds, ascending
  std::int64_t resample_step = 1;              // seconds

  // {-max_shift, ..., +max_shift} in steps of `resample_step`.
  static ShiftSearchConfig symmetric(std::int64_t max_shift,
                                     std::int64_t resample_step = 1);
};

struct AlignmentResult {
  std::int64_t optimal_shift = 0;  // seconds
  std::vector<std::pair<std::int64_t, double>> similarity_curve;
  double max_similarity = 0.0;
};

// Cosine similarity between the spectrum of x and that of y delayed by d
// samples (y[(n - d) mod N]) for every d in [0, N). Uses the cross-spectrum,
// so the whole curve costs two forward FFTs and one inverse.
std::vector<double> circular_similarity(std::span<const double> x,
                                        std::span<const double> y);

// Search over equal-length, already-conditioned samples. Shifts are in
// samples. Ties go to the smallest |shift|, then the smaller shift.
AlignmentResult search_shift(std::span<const double> x, std::span<const double> y,
                             std::span<const std::int64_t> candidate_shifts);

// Full operation: restricts both series to their common interval, holds each
// value over its cell on a `resample_step` grid, mean-imputes gaps, z-scores
// and searches. A positive result means x (BC) lags y (activity).
AlignmentResult find_optimal_shift(const GridSeries& x, const GridSeries& y,
                                   const ShiftSearchConfig& cfg);

// Moves every timestamp `shift` seconds earlier (start -= shift). Values are
// never wrapped or interpolated; bins the shifted series no longer covers are
// simply absent.
BcSeries apply_shift(const BcSeries& series, std::int64_t shift);
GridSeries apply_shift(const GridSeries& series, std::int64_t shift);

// "shift_s,cosine_similarity" rows.
std::string similarity_curve_csv(const AlignmentResult& result);

}  // namespace bctrace::align
