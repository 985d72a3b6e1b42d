#include <cmath>

#include "bctrace/bc_signal.hpp"
#include "bctrace/error.hpp"

namespace bctrace::signal {

OnaResult ona_filter(const BcSeries& series, const OnaConfig& cfg) {
  if (!(cfg.delta_atn >= 0.0)) {
    throw Error(ErrorCode::kBadParams, "delta_atn must be non-negative");
  }
  if (series.atn.size() != series.values.size()) {
    throw Error(ErrorCode::kMissingAtn, "ATN array does not match BC values");
  }
  std::vector<std::size_t> valid;
  valid.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (is_missing(series.values[i])) continue;
    if (is_missing(series.atn[i])) {
      throw Error(ErrorCode::kMissingAtn,
                  "ATN missing for BC reading at cell " + std::to_string(i));
    }
    valid.push_back(i);
  }

  OnaResult out;
  out.series = series;
  out.window_sizes.assign(series.size(), 0);

  std::size_t begin = 0;
  while (begin < valid.size()) {
    const double base = series.atn[valid[begin]];
    std::size_t last = begin;  // inclusive end of the window
    bool closed = false;
    for (std::size_t j = begin; j < valid.size(); ++j) {
      const double atn = series.atn[valid[j]];
      if (j > begin && atn < series.atn[valid[j - 1]]) {
        last = j - 1;  // filter change: reading j opens the next window
        closed = true;
        break;
      }
      last = j;
      if (atn - base >= cfg.delta_atn) {
        closed = true;
        break;
      }
    }
    const std::size_t count = last - begin + 1;
    double sum = 0.0;
    for (std::size_t j = begin; j <= last; ++j) sum += series.values[valid[j]];
    const double mean = sum / static_cast<double>(count);
    for (std::size_t j = begin; j <= last; ++j) {
      out.series.values[valid[j]] = mean;
      out.window_sizes[valid[j]] = static_cast<int>(count);
    }
    if (last + 1 == valid.size()) out.trailing_window_open = !closed;
    begin = last + 1;
  }
  return out;
}

}  // namespace bctrace::signal
