#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/eval.hpp"

namespace bctrace::eval {

EvalReport metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || truth.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("metrics need equal lengths >= 2 (got {} and {})", pred.size(),
                            truth.size()));
  }
  const auto n = static_cast<double>(truth.size());
  double se = 0.0, ae = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double e = pred[i] - truth[i];
    se += e * e;
    ae += std::abs(e);
    mean += truth[i];
  }
  mean /= n;
  double tot = 0.0;
  for (double y : truth) tot += (y - mean) * (y - mean);
  EvalReport r;
  r.n = truth.size();
  r.rmse = std::sqrt(se / n);
  r.mae = ae / n;
  if (tot > 0.0) r.r2 = 1.0 - se / tot;
  return r;
}

Comparison compare_models(std::span<const double> errors_a, std::span<const double> errors_b) {
  if (errors_a.size() != errors_b.size() || errors_a.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("paired test needs equal lengths >= 2 (got {} and {})",
                            errors_a.size(), errors_b.size()));
  }
  const std::size_t n = errors_a.size();
  std::vector<double> d(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = errors_a[i] * errors_a[i] - errors_b[i] * errors_b[i];
    mean += d[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  Comparison c;
  if (!(sd > 0.0)) {
    if (mean == 0.0) return c;
    c.t_stat = std::copysign(std::numeric_limits<double>::infinity(), mean);
    c.p_value = 0.0;
    return c;
  }
  c.t_stat = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(c.t_stat)));
  return c;
}

}  // namespace bctrace::eval
