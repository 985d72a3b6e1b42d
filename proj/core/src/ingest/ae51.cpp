#include <array>
#include <string>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/ingest.hpp"
#include "text.hpp"

namespace bctrace {
namespace {

constexpr std::array<std::string_view, 11> kColumns = {
    "Date",    "Time",   "Ref",     "Sen", "ATN",          "Flow",
    "Pcb temp", "Status", "Battery", "BC",  "Ona_#_pts_avg"};

template <typename T>
T require(std::optional<T> v, std::string_view column, std::size_t line) {
  if (!v) {
    throw Error(ErrorCode::kMalformedRow,
                fmt::format("bad value in column '{}'", column), line);
  }
  return *v;
}

}  // namespace

std::vector<BcSample> parse_ae51_csv(std::string_view input) {
  std::vector<BcSample> out;
  std::size_t n_columns = 0;
  text::for_each_line(input, [&](std::string_view raw, std::size_t line) {
    const std::string_view row = text::trim(raw);
    if (row.empty()) return;
    const auto fields = text::split(row, ',');
    if (n_columns == 0) {
      if (fields.size() != kColumns.size() &&
          fields.size() != kColumns.size() - 1) {
        throw Error(ErrorCode::kMalformedRow,
                    fmt::format("expected AE51 header with {} columns, got {}",
                                kColumns.size(), fields.size()),
                    line);
      }
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (!text::iequals(text::trim(fields[i]), kColumns[i])) {
          throw Error(ErrorCode::kMalformedRow,
                      fmt::format("header column {} is '{}', expected '{}'",
                                  i + 1, text::trim(fields[i]), kColumns[i]),
                      line);
        }
      }
      n_columns = fields.size();
      return;
    }
    if (fields.size() != n_columns) {
      throw Error(ErrorCode::kMalformedRow,
                  fmt::format("expected {} columns, got {}", n_columns,
                              fields.size()),
                  line);
    }
    BcSample s;
    const auto ts = parse_date_and_time(text::trim(fields[0]),
                                        text::trim(fields[1]));
    s.timestamp = require(ts, "Date/Time", line);
    s.ref_count = require(text::to_int(fields[2]), "Ref", line);
    s.sen_count = require(text::to_int(fields[3]), "Sen", line);
    s.atn = require(text::to_double(fields[4]), "ATN", line);
    s.flow = require(text::to_double(fields[5]), "Flow", line);
    s.pcb_temp = require(text::to_double(fields[6]), "Pcb temp", line);
    s.status = static_cast<int>(require(text::to_int(fields[7]), "Status", line));
    s.battery = require(text::to_double(fields[8]), "Battery", line);
    if (!text::trim(fields[9]).empty()) {
      s.bc_raw = require(text::to_double(fields[9]), "BC", line);
    }
    if (n_columns == kColumns.size()) {
      const auto ona = text::trim(fields[10]);
      if (!ona.empty() && !text::iequals(ona, "NULL")) {
        s.ona_pts = static_cast<int>(require(text::to_int(ona), "Ona_#_pts_avg", line));
      }
    }
    if (!(s.flow > 0.0)) {
      throw Error(ErrorCode::kRangeError, "flow must be positive", line);
    }
    if (s.battery < 0.0 || s.battery > 100.0) {
      throw Error(ErrorCode::kRangeError, "battery outside [0, 100]", line);
    }
    if (!out.empty() && s.timestamp <= out.back().timestamp) {
      throw Error(ErrorCode::kNonMonotoneTime,
                  fmt::format("timestamp {} does not advance past {}",
                              format_iso8601(s.timestamp),
                              format_iso8601(out.back().timestamp)),
                  line);
    }
    out.push_back(s);
  });
  return out;
}

std::string serialize_ae51_csv(std::span<const BcSample> samples) {
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& s : samples) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},", format_ae51_date(s.timestamp),
                       format_ae51_time(s.timestamp), s.ref_count, s.sen_count,
                       s.atn, s.flow, s.pcb_temp, s.status, s.battery);
    if (s.bc_raw) out += fmt::format("{}", *s.bc_raw);
    out += ',';
    out += s.ona_pts ? std::to_string(*s.ona_pts) : std::string("NULL");
    out += '\n';
  }
  return out;
}

}  // namespace bctrace
