#include <fmt/format.h>

#include "bctrace/dataset.hpp"
#include "bctrace/error.hpp"

namespace bctrace::model {

std::vector<double> Dataset::column(std::size_t c) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, c);
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
  Dataset out;
  out.feature_names = feature_names;
  out.x.reserve(idx.size() * cols());
  out.y.reserve(idx.size());
  for (std::size_t r : idx) {
    if (r >= rows()) throw Error(ErrorCode::kRangeError, fmt::format("row {} out of range", r));
    const auto src = row(r);
    out.x.insert(out.x.end(), src.begin(), src.end());
    out.y.push_back(y[r]);
  }
  return out;
}

void Dataset::push_row(std::span<const double> features, double target) {
  if (features.size() != cols()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("row has {} values, schema has {}", features.size(), cols()));
  }
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(target);
}

void Dataset::check_shape() const {
  if (x.size() != y.size() * cols()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} values for {} rows x {} features", x.size(), y.size(), cols()));
  }
}

}  // namespace bctrace::model
