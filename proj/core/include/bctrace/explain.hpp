#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bctrace/dataset.hpp"
#include "bctrace/model.hpp"

namespace bctrace::explain {

inline constexpr std::size_t kMaxFeatures = 15;

// kEnumeration evaluates the value function on all 2^F coalitions using the
// model as a black box. kAuto does the same for linear models in closed form
// and, for tree ensembles, splits each tree's value function into per-leaf
// games over the features on the path; both give the same exact values.
enum class ShapMethod { kAuto, kEnumeration };

struct ShapReport {
  std::size_t row_id = 0;
  double base_value = 0.0;  // mean prediction over the background
  double prediction = 0.0;
  std::vector<std::string> feature_names;
  std::vector<double> phi;  // one per feature, model order
};

// Interventional Shapley values: v(S) averages the model over background
// rows with the features in S taken from `row`.
ShapReport shapley_exact(const model::Model& m, std::span<const double> row,
                         const model::Dataset& background, std::size_t row_id = 0,
                         ShapMethod method = ShapMethod::kAuto);

// Every row of `rows`; row_id is the row position. Parallel over rows when
// threads > 1, with identical results.
std::vector<ShapReport> shapley_rows(const model::Model& m, const model::Dataset& rows,
                                     const model::Dataset& background,
                                     ShapMethod method = ShapMethod::kAuto, unsigned threads = 1);

struct Importance {
  std::string feature;
  double mean_abs = 0.0;
};

// Mean |phi| per feature, descending, ties by name.
std::vector<Importance> global_importance(std::span<const ShapReport> reports);

// All rows when there are at most `cap`, else a seeded sample of `cap` rows
// (kept in table order).
model::Dataset select_background(const model::Dataset& train, std::size_t cap, std::uint64_t seed);

// Long-format rows "row_id,feature,value,phi" for beeswarm plots.
std::string shap_csv(std::span<const ShapReport> reports, const model::Dataset& rows);

}  // namespace bctrace::explain
