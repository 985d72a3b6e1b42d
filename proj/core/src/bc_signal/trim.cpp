#include <cmath>
#include <map>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "bctrace/bc_signal.hpp"
#include "bctrace/error.hpp"

namespace bctrace::signal {

double critical_z(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::kBadParams, "confidence level must lie in (0, 1)");
  }
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 0.5 + level / 2.0);
  return std::round(z * 100.0) / 100.0;
}

namespace {

TrimBounds stats_for(const std::vector<double>& v, std::string dataset, double z) {
  TrimBounds b;
  b.dataset = std::move(dataset);
  b.n = v.size();
  if (v.empty()) return b;
  double sum = 0.0;
  for (double x : v) sum += x;
  b.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - b.mean) * (x - b.mean);
    b.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  b.lower = b.mean - z * b.sd;
  b.upper = b.mean + z * b.sd;
  return b;
}

}  // namespace

TrimResult trim_with_bounds(std::span<const double> values,
                            std::span<const std::string> datasets,
                            std::span<const TrimBounds> bounds, double level) {
  if (!datasets.empty() && datasets.size() != values.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one dataset label per value required");
  }
  const double z = critical_z(level);
  std::map<std::string, const TrimBounds*, std::less<>> by_label;
  const TrimBounds* pooled = nullptr;
  for (const auto& b : bounds) {
    if (b.dataset.empty()) pooled = &b;
    by_label[b.dataset] = &b;
  }
  TrimResult out;
  out.bounds.assign(bounds.begin(), bounds.end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::string& label = datasets.empty() ? std::string() : datasets[i];
    const TrimBounds* b = pooled;
    if (auto it = by_label.find(label); it != by_label.end()) b = it->second;
    if (b == nullptr) {
      throw Error(ErrorCode::kBadParams, fmt::format("no trim bounds for dataset '{}'", label));
    }
    const double v = values[i];
    if (is_missing(v)) {
      out.kept.push_back(i);
      continue;
    }
    if (!(b->sd > 0.0) && v != b->mean) {
      throw Error(ErrorCode::kDegenerateVariance,
                  fmt::format("zero spread in dataset '{}' but value {} differs from mean {}",
                              label, v, b->mean));
    }
    if (std::abs(v - b->mean) > z * b->sd) {
      out.removed.push_back({i, label, v, b->lower, b->upper});
    } else {
      out.kept.push_back(i);
    }
  }
  return out;
}

TrimResult trim_outliers(std::span<const double> values,
                         std::span<const std::string> datasets,
                         const TrimConfig& cfg) {
  if (!datasets.empty() && datasets.size() != values.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one dataset label per value required");
  }
  const double z = critical_z(cfg.level);
  std::vector<TrimBounds> bounds;
  if (cfg.mode == TrimMode::kGlobal || datasets.empty()) {
    std::vector<double> pooled;
    for (double v : values) {
      if (!is_missing(v)) pooled.push_back(v);
    }
    bounds.push_back(stats_for(pooled, "", z));
  } else {
    std::map<std::string, std::vector<double>, std::less<>> groups;
    for (std::size_t i = 0; i < values.size(); ++i) {
      auto& g = groups[datasets[i]];
      if (!is_missing(values[i])) g.push_back(values[i]);
    }
    for (auto& [label, v] : groups) bounds.push_back(stats_for(v, label, z));
  }
  if (cfg.mode == TrimMode::kGlobal) {
    return trim_with_bounds(values, {}, bounds, cfg.level);
  }
  return trim_with_bounds(values, datasets, bounds, cfg.level);
}

TrimResult trim_outliers(std::span<const FeatureRow> rows, const TrimConfig& cfg,
                         TargetKind target) {
  std::vector<double> values;
  std::vector<std::string> labels;
  values.reserve(rows.size());
  labels.reserve(rows.size());
  for (const auto& r : rows) {
    const auto t = target_of(r, target);
    values.push_back(t ? *t : kMissing);
    labels.push_back(r.dataset);
  }
  return trim_outliers(values, labels, cfg);
}

TrimResult trim_outliers(const BcSeries& series, const TrimConfig& cfg) {
  return trim_outliers(std::span<const double>(series.values),
                       std::span<const std::string>(), cfg);
}

std::string removed_rows_csv(const TrimResult& result) {
  std::string out = "index,dataset,value,lower,upper,reason\n";
  for (const auto& r : result.removed) {
    out += fmt::format("{},{},{},{},{},{}\n", r.index, r.dataset, r.value, r.lower,
                       r.upper, r.value < r.lower ? "below_lower" : "above_upper");
  }
  return out;
}

}  // namespace bctrace::signal
