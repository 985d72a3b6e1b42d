#include "bctrace/error.hpp"
#include "bctrace/ingest.hpp"

namespace bctrace {

std::optional<std::size_t> BcSeries::index_of(UnixSeconds t) const {
  if (t < start || values.empty()) return std::nullopt;
  const auto i = static_cast<std::size_t>((t - start) / step);
  if (i >= values.size()) return std::nullopt;
  return i;
}

double BcSeries::value_at(UnixSeconds t) const {
  const auto i = index_of(t);
  return i ? values[*i] : kMissing;
}

BcSeries resample_to_grid(std::span<const BcSample> samples, std::int64_t step) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyInput, "no BC samples to grid");
  if (step <= 0) throw Error(ErrorCode::kBadParams, "grid step must be positive");
  BcSeries out;
  out.start = samples.front().timestamp;
  out.step = step;
  const auto n = static_cast<std::size_t>(
      (samples.back().timestamp - out.start) / step + 1);
  out.values.assign(n, kMissing);
  out.atn.assign(n, kMissing);
  std::vector<bool> filled(n, false);
  for (const auto& s : samples) {
    if (s.timestamp < out.start) {
      throw Error(ErrorCode::kNonMonotoneTime, "samples must be sorted");
    }
    const auto i = static_cast<std::size_t>((s.timestamp - out.start) / step);
    if (filled[i]) continue;  // first in-window sample wins
    filled[i] = true;
    out.values[i] = s.bc_raw ? *s.bc_raw : kMissing;
    out.atn[i] = s.atn;
  }
  return out;
}

}  // namespace bctrace
