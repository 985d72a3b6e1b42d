#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/model.hpp"

namespace bctrace::model {

LinearModel fit_linear(const Dataset& data) {
  data.check_shape();
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto p = static_cast<Eigen::Index>(data.cols());
  if (n == 0) throw Error(ErrorCode::kSingularDesign, "empty design matrix");
  for (double v : data.x) {
    if (std::isnan(v)) throw Error(ErrorCode::kBadParams, "linear fit requires complete features");
  }
  for (double v : data.y) {
    if (std::isnan(v)) throw Error(ErrorCode::kBadParams, "target contains missing values");
  }
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) x(r, c) = data.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    y(r) = data.y[static_cast<std::size_t>(r)];
  }
  // Centring absorbs the intercept, leaving a minimum-norm problem in the
  // slopes only.
  const Eigen::RowVectorXd xbar = x.colwise().mean();
  const double ybar = y.mean();
  x.rowwise() -= xbar;
  y.array() -= ybar;

  LinearModel m;
  m.feature_names = data.feature_names;
  m.coefficients.assign(static_cast<std::size_t>(p), 0.0);
  if (p > 0) {
    const Eigen::VectorXd beta = x.completeOrthogonalDecomposition().solve(y);
    for (Eigen::Index c = 0; c < p; ++c) m.coefficients[static_cast<std::size_t>(c)] = beta(c) + 0.0;
    m.intercept = ybar - xbar.dot(beta) + 0.0;
  } else {
    m.intercept = ybar;
  }
  return m;
}

}  // namespace bctrace::model
