#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bctrace::model {

// Dense design matrix, row-major. NaN marks a missing feature value.
struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t rows() const { return y.size(); }
  std::size_t cols() const { return feature_names.size(); }
  double at(std::size_t r, std::size_t c) const { return x[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(x).subspan(r * cols(), cols());
  }
  std::vector<double> column(std::size_t c) const;

  Dataset subset(std::span<const std::size_t> rows) const;
  void push_row(std::span<const double> features, double target);
  // Throws kLengthMismatch when x and y disagree with the schema.
  void check_shape() const;
};

}  // namespace bctrace::model
