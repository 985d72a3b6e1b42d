#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bctrace {

// Seconds since the Unix epoch, UTC. All timestamps are normalized to this at
// parse time.
using UnixSeconds = std::int64_t;

// Accepts "YYYY-MM-DD HH:MM:SS", "YYYY/MM/DD HH:MM:SS" and
// "YYYY-MM-DDTHH:MM:SS[Z]". Returns nullopt on anything else, including
// out-of-range fields.
std::optional<UnixSeconds> parse_datetime(std::string_view text);

// Date and time held in separate columns (AE51 layout).
std::optional<UnixSeconds> parse_date_and_time(std::string_view date,
                                               std::string_view time);

// Canonical emission: "2024-11-05T17:34:50Z".
std::string format_iso8601(UnixSeconds t);

// "2024-11-05 17:34:50" (event log layout).
std::string format_spaced(UnixSeconds t);

// AE51 columns: "2024/11/04" and "18:49:30".
std::string format_ae51_date(UnixSeconds t);
std::string format_ae51_time(UnixSeconds t);

// Floor division onto a grid of `step` seconds anchored at `origin`.
inline std::int64_t grid_index(UnixSeconds t, UnixSeconds origin,
                               std::int64_t step) {
  const std::int64_t d = t - origin;
  return d >= 0 ? d / step : -((-d + step - 1) / step);
}

}  // namespace bctrace
