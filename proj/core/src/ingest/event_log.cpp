#include <array>
#include <unordered_set>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/ingest.hpp"
#include "text.hpp"

namespace bctrace {
namespace {

constexpr std::array<std::pair<ObjectClass, std::string_view>, 7> kClassNames = {{
    {ObjectClass::kCar, "car"},
    {ObjectClass::kTruck, "truck"},
    {ObjectClass::kBus, "bus"},
    {ObjectClass::kMotorcycle, "motorcycle"},
    {ObjectClass::kBicycle, "bicycle"},
    {ObjectClass::kPerson, "person"},
    {ObjectClass::kStreetcar, "streetcar"},
}};

}  // namespace

std::string_view to_string(ObjectClass c) {
  for (const auto& [cls, name] : kClassNames) {
    if (cls == c) return name;
  }
  return "?";
}

std::optional<ObjectClass> parse_object_class(std::string_view token) {
  for (const auto& [cls, name] : kClassNames) {
    if (text::iequals(token, name)) return cls;
  }
  return std::nullopt;
}

std::vector<DetectionEvent> parse_event_log(std::string_view input) {
  std::vector<DetectionEvent> out;
  std::unordered_set<std::int64_t> seen;
  text::for_each_line(input, [&](std::string_view raw, std::size_t line) {
    const std::string_view row = text::trim(raw);
    if (row.empty()) return;
    const std::size_t colon = row.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kMalformedRow, "missing ' : ' separator", line);
    }
    const std::string_view token = text::trim(row.substr(0, colon));
    const std::string_view rest = text::trim(row.substr(colon + 1));

    const std::size_t marker = token.rfind("_line");
    if (marker == std::string_view::npos || marker == 0) {
      throw Error(ErrorCode::kMalformedRow,
                  fmt::format("token '{}' is not <class>_line<k>", token), line);
    }
    DetectionEvent ev;
    const std::string_view cls = token.substr(0, marker);
    const auto parsed_cls = parse_object_class(cls);
    if (!parsed_cls) {
      throw Error(ErrorCode::kUnknownClass, std::string(cls), line);
    }
    ev.object_class = *parsed_cls;
    const std::string_view lane = token.substr(marker + 5);
    if (lane != "?") {
      const auto k = text::to_int(lane);
      if (!k || *k < 1) {
        throw Error(ErrorCode::kMalformedRow,
                    fmt::format("bad lane '{}'", lane), line);
      }
      ev.lane = static_cast<int>(*k);
    }

    const std::size_t space = rest.find(' ');
    if (space == std::string_view::npos) {
      throw Error(ErrorCode::kMalformedRow, "expected '<id> <timestamp>'", line);
    }
    const auto id = text::to_int(rest.substr(0, space));
    const auto ts = parse_datetime(text::trim(rest.substr(space + 1)));
    if (!id || !ts) {
      throw Error(ErrorCode::kMalformedRow, "bad id or timestamp", line);
    }
    if (!seen.insert(*id).second) {
      throw Error(ErrorCode::kMalformedRow,
                  fmt::format("duplicate track id {}", *id), line);
    }
    ev.track_id = *id;
    ev.timestamp = *ts;
    out.push_back(ev);
  });
  return out;
}

std::string serialize_event_log(std::span<const DetectionEvent> events) {
  std::string out;
  for (const auto& ev : events) {
    out += fmt::format("{}_line{} : {} {}\n", to_string(ev.object_class),
                       ev.lane ? std::to_string(*ev.lane) : std::string("?"),
                       ev.track_id, format_spaced(ev.timestamp));
  }
  return out;
}

}  // namespace bctrace
