#pragma once

#include <cstdint>
#include <vector>

#include "bctrace/model.hpp"

namespace bctrace::model::detail {

// Per-feature row order by value (non-missing rows only) plus the rows whose
// value is missing. Built once per fit and shared by every tree.
struct Presorted {
  std::vector<std::vector<std::uint32_t>> by_value;
  std::vector<std::vector<std::uint32_t>> missing;
};

Presorted presort(const Dataset& data);

Tree grow_tree(const Dataset& data, const Presorted& sorted, std::span<const double> grad,
               std::span<const double> hess, std::span<const double> weights,
               const TreeParams& params);

double rmse(std::span<const double> pred, std::span<const double> y);

}  // namespace bctrace::model::detail
