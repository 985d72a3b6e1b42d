#include <cmath>
#include <random>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "tree_internal.hpp"

namespace bctrace::model {

ForestModel fit_forest(const Dataset& input, const ForestParams& params, std::uint64_t seed) {
  if (params.n_trees < 1 || params.min_samples_split < 2) {
    throw Error(ErrorCode::kBadParams,
                fmt::format("invalid forest parameters (trees {}, min_samples_split {})",
                            params.n_trees, params.min_samples_split));
  }
  input.check_shape();
  if (input.rows() < 2) {
    throw Error(ErrorCode::kTooFewRows, fmt::format("need at least 2 rows, got {}", input.rows()));
  }
  for (double v : input.y) {
    if (std::isnan(v)) throw Error(ErrorCode::kBadParams, "target contains missing values");
  }
  const Dataset data = input.subset(canonical_order(input));
  const auto sorted = detail::presort(data);
  const std::size_t n = data.rows();

  ForestModel m;
  m.feature_names = data.feature_names;
  m.params = params;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> weights(n), grad(n), hess(n, 1.0);
  std::vector<double> oob_sum(n, 0.0);
  std::vector<int> oob_n(n, 0);
  const TreeParams tp{params.max_depth, 0.0, 0.0, params.min_samples_split};
  for (int t = 0; t < params.n_trees; ++t) {
    if (params.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) weights[pick(rng)] += 1.0;
    } else {
      std::fill(weights.begin(), weights.end(), 1.0);
    }
    double sw = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sw += weights[i];
      sy += weights[i] * data.y[i];
    }
    const double base = sy / sw;
    for (std::size_t i = 0; i < n; ++i) grad[i] = base - data.y[i];
    Tree tree = detail::grow_tree(data, sorted, grad, hess, weights, tp);
    for (std::size_t i = 0; i < n; ++i) {
      if (weights[i] == 0.0) {
        oob_sum[i] += base + tree.predict(data.row(i));
        ++oob_n[i];
      }
    }
    m.trees.push_back(std::move(tree));
    m.tree_base.push_back(base);
  }
  double se = 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (oob_n[i] == 0) continue;
    const double e = oob_sum[i] / oob_n[i] - data.y[i];
    se += e * e;
    ++covered;
  }
  if (covered > 0) m.oob_rmse = std::sqrt(se / static_cast<double>(covered));
  return m;
}

}  // namespace bctrace::model
