#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::vision {

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {
  if (w < 0 || h < 0) throw Error(ErrorCode::kBadParams, "negative image size");
}

namespace {

// Reads one whitespace-delimited header integer, skipping '#' comments.
int header_int(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const char ch = bytes[pos];
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  int value = 0;
  const auto* first = bytes.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, bytes.data() + bytes.size(), value);
  if (ec != std::errc() || ptr == first) {
    throw Error(ErrorCode::kMalformedRow, "bad PGM header");
  }
  pos += static_cast<std::size_t>(ptr - first);
  return value;
}

}  // namespace

GrayImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") {
    throw Error(ErrorCode::kMalformedRow, "not a binary PGM (P5) image");
  }
  std::size_t pos = 2;
  const int w = header_int(bytes, pos);
  const int h = header_int(bytes, pos);
  const int maxval = header_int(bytes, pos);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw Error(ErrorCode::kMalformedRow,
                fmt::format("unsupported PGM geometry {}x{} maxval {}", w, h, maxval));
  }
  ++pos;  // single whitespace byte before the raster
  const auto n = static_cast<std::size_t>(w) * h;
  if (bytes.size() < pos + n) throw Error(ErrorCode::kMalformedRow, "truncated PGM raster");
  GrayImage img(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(bytes[pos + i]);
  }
  return img;
}

std::string serialize_pgm(const GrayImage& img) {
  std::string out = fmt::format("P5\n{} {}\n255\n", img.width, img.height);
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

}  // namespace bctrace::vision
