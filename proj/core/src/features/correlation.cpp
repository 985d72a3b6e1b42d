#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/features.hpp"

namespace bctrace::features {
namespace {

// Pearson r over rows where both values are present; nullopt when either
// side is constant on those rows.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    ma += a[i];
    mb += b[i];
    ++n;
  }
  if (n < 2) return std::nullopt;
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isnan(a[i]) || std::isnan(b[i])) continue;
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

bool is_constant(const std::vector<double>& v) {
  std::optional<double> first;
  for (double x : v) {
    if (std::isnan(x)) continue;
    if (!first) {
      first = x;
    } else if (x != *first) {
      return false;
    }
  }
  return true;
}

}  // namespace

CorrelationReport correlation_matrix(const model::Dataset& table) {
  table.check_shape();
  if (table.rows() < 3) {
    throw Error(ErrorCode::kTooFewRows,
                fmt::format("correlation needs at least 3 rows, got {}", table.rows()));
  }
  const std::size_t f = table.cols();
  std::vector<std::vector<double>> cols(f);
  for (std::size_t c = 0; c < f; ++c) cols[c] = table.column(c);
  CorrelationReport rep;
  rep.names = table.feature_names;
  rep.matrix.assign(f * f, 0.0);
  rep.target_r.assign(f, 0.0);
  for (std::size_t i = 0; i < f; ++i) {
    if (is_constant(cols[i])) rep.constant.push_back(rep.names[i]);
    rep.matrix[i * f + i] = 1.0;
    for (std::size_t j = i + 1; j < f; ++j) {
      const double r = pearson(cols[i], cols[j]).value_or(0.0);
      rep.matrix[i * f + j] = r;
      rep.matrix[j * f + i] = r;
    }
    rep.target_r[i] = pearson(cols[i], table.y).value_or(0.0);
  }
  return rep;
}

FilterResult filter_correlated(const model::Dataset& table, double threshold) {
  FilterResult out;
  out.report = correlation_matrix(table);
  auto& rep = out.report;
  const std::size_t f = rep.names.size();
  std::vector<bool> active(f, true);
  std::vector<std::size_t> dropped_order;

  // Among equally strong pairs the one with the lexicographically smallest
  // (name, name) goes first.
  auto pair_key = [&](std::size_t i, std::size_t j) {
    const auto& a = rep.names[i];
    const auto& b = rep.names[j];
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  };
  for (;;) {
    std::optional<std::pair<std::size_t, std::size_t>> worst;
    for (std::size_t i = 0; i < f; ++i) {
      for (std::size_t j = i + 1; j < f; ++j) {
        if (!active[i] || !active[j] || !(std::abs(rep.r(i, j)) > threshold)) continue;
        if (!worst) {
          worst = {i, j};
          continue;
        }
        const double cur = std::abs(rep.r(worst->first, worst->second));
        const double cand = std::abs(rep.r(i, j));
        if (cand > cur || (cand == cur && pair_key(i, j) < pair_key(worst->first, worst->second))) {
          worst = {i, j};
        }
      }
    }
    if (!worst) break;
    auto [i, j] = *worst;
    const double ti = std::abs(rep.target_r[i]);
    const double tj = std::abs(rep.target_r[j]);
    const std::size_t drop = ti < tj ? i : tj < ti ? j : (rep.names[i] > rep.names[j] ? i : j);
    active[drop] = false;
    dropped_order.push_back(drop);
  }

  // Restore dropped features whose every conflict has itself been dropped.
  std::vector<std::size_t> candidates = dropped_order;
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    const double ta = std::abs(rep.target_r[a]);
    const double tb = std::abs(rep.target_r[b]);
    return ta != tb ? ta > tb : rep.names[a] < rep.names[b];
  });
  for (std::size_t c : candidates) {
    bool clear = true;
    for (std::size_t k = 0; k < f && clear; ++k) {
      if (active[k] && std::abs(rep.r(c, k)) > threshold) clear = false;
    }
    if (clear) active[c] = true;
  }

  for (std::size_t d : dropped_order) {
    if (active[d]) continue;
    std::optional<std::size_t> partner;
    for (std::size_t k = 0; k < f; ++k) {
      if (!active[k]) continue;
      if (!partner || std::abs(rep.r(d, k)) > std::abs(rep.r(d, *partner))) partner = k;
    }
    rep.dropped.push_back({rep.names[d], partner ? rep.names[*partner] : std::string(),
                           partner ? rep.r(d, *partner) : 0.0});
  }

  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < f; ++c) {
    if (active[c]) keep.push_back(c);
  }
  out.table.y = table.y;
  for (std::size_t c : keep) out.table.feature_names.push_back(table.feature_names[c]);
  out.table.x.reserve(table.rows() * keep.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c : keep) out.table.x.push_back(table.at(r, c));
  }
  return out;
}

std::string correlation_csv(const CorrelationReport& report) {
  std::string out = "feature";
  for (const auto& n : report.names) out += "," + n;
  out += ",target\n";
  for (std::size_t i = 0; i < report.names.size(); ++i) {
    out += report.names[i];
    for (std::size_t j = 0; j < report.names.size(); ++j) out += fmt::format(",{}", report.r(i, j));
    out += fmt::format(",{}\n", report.target_r[i]);
  }
  return out;
}

}  // namespace bctrace::features
