#pragma once

#include <span>
#include <string>
#include <vector>

#include "bctrace/feature_row.hpp"
#include "bctrace/ingest.hpp"

namespace bctrace::signal {

struct OnaConfig {
  double delta_atn = 0.05;
};

struct OnaResult {
  BcSeries series;                // same grid, window means in place of readings
  std::vector<int> window_sizes;  // per cell; 0 where the reading is missing
  // The last window ran into the end of the record before its ATN increase
  // reached the threshold.
  bool trailing_window_open = false;
};

// Optimized noise-reduction: consecutive non-missing readings are grouped
// into windows that close at the first reading whose ATN has risen by at
// least delta_atn since the window opened (that reading included), or just
// before a downward ATN jump (filter change). Every reading in a window is
// replaced by the window mean.
OnaResult ona_filter(const BcSeries& series, const OnaConfig& cfg);

enum class TrimMode { kGlobal, kLocal };

struct TrimConfig {
  TrimMode mode = TrimMode::kLocal;
  double level = 0.95;
};

// Two-sided normal critical value rounded to two decimals (1.96 at 0.95).
double critical_z(double level);

struct TrimBounds {
  std::string dataset;  // empty under global mode
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation
  double lower = 0.0;
  double upper = 0.0;
};

struct RemovedRow {
  std::size_t index = 0;
  std::string dataset;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct TrimResult {
  std::vector<std::size_t> kept;
  std::vector<RemovedRow> removed;
  std::vector<TrimBounds> bounds;
};

// Removes values with |v - mean| > z * sd, where mean and sd come from the
// pooled values (global) or from each dataset label separately (local).
// Missing (NaN) values are kept and ignored by the statistics.
TrimResult trim_outliers(std::span<const double> values,
                         std::span<const std::string> datasets,
                         const TrimConfig& cfg);

// Applies precomputed bounds (one per dataset label, or a single unlabeled
// entry for global bounds).
TrimResult trim_with_bounds(std::span<const double> values,
                            std::span<const std::string> datasets,
                            std::span<const TrimBounds> bounds,
                            double level = 0.95);

// Convenience overloads. Table rows are labeled by FeatureRow::dataset.
TrimResult trim_outliers(std::span<const FeatureRow> rows, const TrimConfig& cfg,
                         TargetKind target = TargetKind::kPost);
TrimResult trim_outliers(const BcSeries& series, const TrimConfig& cfg);

// Audit CSV: index,dataset,value,lower,upper,reason.
std::string removed_rows_csv(const TrimResult& result);

}  // namespace bctrace::signal
