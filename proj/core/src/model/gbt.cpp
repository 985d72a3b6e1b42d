#include <cmath>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "tree_internal.hpp"

namespace bctrace::model {
namespace {

void check_targets(const Dataset& data) {
  data.check_shape();
  if (data.rows() < 2) {
    throw Error(ErrorCode::kTooFewRows, fmt::format("need at least 2 rows, got {}", data.rows()));
  }
  for (double v : data.y) {
    if (std::isnan(v)) throw Error(ErrorCode::kBadParams, "target contains missing values");
  }
}

}  // namespace

GbtModel fit_gbt(const Dataset& input, const GbtHyperParams& params, std::uint64_t /*seed*/) {
  if (params.n_estimators < 1 || !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) ||
      params.max_depth < 1 || params.lambda < 0.0 || params.min_split_gain < 0.0 ||
      params.min_samples_split < 2) {
    throw Error(ErrorCode::kBadParams,
                fmt::format("invalid boosting parameters (trees {}, eta {}, depth {}, lambda {})",
                            params.n_estimators, params.learning_rate, params.max_depth,
                            params.lambda));
  }
  check_targets(input);
  const auto order = canonical_order(input);
  const Dataset data = input.subset(order);
  const auto sorted = detail::presort(data);
  const std::size_t n = data.rows();

  GbtModel m;
  m.feature_names = data.feature_names;
  m.params = params;
  m.learning_rate = params.learning_rate;
  double sum = 0.0;
  for (double v : data.y) sum += v;
  m.base_score = sum / static_cast<double>(n);

  std::vector<double> pred(n, m.base_score);
  std::vector<double> grad(n), hess(n, 1.0), weights(n, 1.0);
  m.train_rmse.push_back(detail::rmse(pred, data.y));
  const TreeParams tp{params.max_depth, params.lambda, params.min_split_gain,
                      params.min_samples_split};
  for (int round = 0; round < params.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - data.y[i];
    Tree t = detail::grow_tree(data, sorted, grad, hess, weights, tp);
    for (std::size_t i = 0; i < n; ++i) pred[i] += m.learning_rate * t.predict(data.row(i));
    m.trees.push_back(std::move(t));
    m.train_rmse.push_back(detail::rmse(pred, data.y));
  }
  return m;
}

}  // namespace bctrace::model
