#include "bctrace/time.hpp"

#include <charconv>
#include <chrono>

#include <fmt/format.h>

namespace bctrace {
namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::optional<UnixSeconds> compose(int y, int mo, int d, int h, int mi,
                                   int s) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
    return std::nullopt;
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<UnixSeconds>(days) * 86400 + h * 3600 + mi * 60 + s;
}

std::optional<UnixSeconds> parse_parts(std::string_view date,
                                       std::string_view time) {
  if (date.size() != 10 || time.size() != 8) return std::nullopt;
  const char sep = date[4];
  if ((sep != '-' && sep != '/') || date[7] != sep) return std::nullopt;
  if (time[2] != ':' || time[5] != ':') return std::nullopt;
  int y, mo, d, h, mi, s;
  if (!parse_int(date.substr(0, 4), y) || !parse_int(date.substr(5, 2), mo) ||
      !parse_int(date.substr(8, 2), d) || !parse_int(time.substr(0, 2), h) ||
      !parse_int(time.substr(3, 2), mi) || !parse_int(time.substr(6, 2), s)) {
    return std::nullopt;
  }
  return compose(y, mo, d, h, mi, s);
}

struct Civil {
  int y, mo, d, h, mi, s;
};

Civil to_civil(UnixSeconds t) {
  using namespace std::chrono;
  std::int64_t days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
  std::int64_t rem = t - days * 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<int>(unsigned(ymd.month())),
          static_cast<int>(unsigned(ymd.day())), static_cast<int>(rem / 3600),
          static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60)};
}

}  // namespace

std::optional<UnixSeconds> parse_datetime(std::string_view text) {
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() != 19) return std::nullopt;
  const char sep = text[10];
  if (sep != ' ' && sep != 'T') return std::nullopt;
  // The 'T' form is ISO-8601 and only uses dashes.
  if (sep == 'T' && text[4] != '-') return std::nullopt;
  return parse_parts(text.substr(0, 10), text.substr(11));
}

std::optional<UnixSeconds> parse_date_and_time(std::string_view date,
                                               std::string_view time) {
  return parse_parts(date, time);
}

std::string format_iso8601(UnixSeconds t) {
  const Civil c = to_civil(t);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", c.y, c.mo,
                     c.d, c.h, c.mi, c.s);
}

std::string format_spaced(UnixSeconds t) {
  const Civil c = to_civil(t);
  return fmt::format("{:04d}-{:02d}-{:02d} {:02d}:{:02d}:{:02d}", c.y, c.mo,
                     c.d, c.h, c.mi, c.s);
}

std::string format_ae51_date(UnixSeconds t) {
  const Civil c = to_civil(t);
  return fmt::format("{:04d}/{:02d}/{:02d}", c.y, c.mo, c.d);
}

std::string format_ae51_time(UnixSeconds t) {
  const Civil c = to_civil(t);
  return fmt::format("{:02d}:{:02d}:{:02d}", c.h, c.mi, c.s);
}

}  // namespace bctrace
