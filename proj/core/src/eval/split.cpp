#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/eval.hpp"

namespace bctrace::eval {

std::string_view to_string(SplitKind k) {
  switch (k) {
    case SplitKind::kStratified: return "stratified";
    case SplitKind::kWindowed: return "windowed";
    case SplitKind::kKfold: return "kfold";
  }
  return "?";
}

std::optional<SplitKind> parse_split_kind(std::string_view s) {
  if (s == "stratified") return SplitKind::kStratified;
  if (s == "windowed") return SplitKind::kWindowed;
  if (s == "kfold") return SplitKind::kKfold;
  return std::nullopt;
}

namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw Error(ErrorCode::kBadParams, fmt::format("train fraction {} outside (0, 1)", f));
  }
}

}  // namespace

Split stratified_split(std::span<const double> target, const SplitSpec& spec) {
  check_fraction(spec.train_fraction);
  if (spec.strata_bins < 1) throw Error(ErrorCode::kBadParams, "strata_bins must be >= 1");
  const std::size_t n = target.size();
  if (n < std::max<std::size_t>(2, spec.strata_bins)) {
    throw Error(ErrorCode::kTooFewRows,
                fmt::format("{} rows cannot fill {} strata", n, spec.strata_bins));
  }
  for (double v : target) {
    if (std::isnan(v)) throw Error(ErrorCode::kBadParams, "stratification target has missing values");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return target[a] < target[b]; });
  const std::size_t bins = spec.strata_bins;
  std::vector<std::vector<std::size_t>> strata(bins);
  for (std::size_t r = 0; r < n; ++r) strata[r * bins / n].push_back(order[r]);

  std::mt19937_64 rng(spec.seed);
  for (auto& s : strata) std::shuffle(s.begin(), s.end(), rng);

  const auto total = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
  std::vector<std::size_t> quota(bins);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < bins; ++s) {
    const double exact = spec.train_fraction * static_cast<double>(strata[s].size());
    quota[s] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[s];
    if (quota[s] < strata[s].size()) remainders.emplace_back(exact - std::floor(exact), s);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned) {
    ++quota[remainders[i].second];
  }

  Split out;
  for (std::size_t s = 0; s < bins; ++s) {
    for (std::size_t i = 0; i < strata[s].size(); ++i) {
      (i < quota[s] ? out.train : out.test).push_back(strata[s][i]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Split windowed_split(std::span<const UnixSeconds> timestamps,
                     std::span<const std::string> datasets, const SplitSpec& spec) {
  check_fraction(spec.train_fraction);
  if (spec.window_length <= 0) throw Error(ErrorCode::kBadParams, "window length must be positive");
  if (!datasets.empty() && datasets.size() != timestamps.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one dataset label per row required");
  }
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    groups[datasets.empty() ? std::string() : datasets[i]].push_back(i);
  }
  Split out;
  for (const auto& [label, rows] : groups) {
    UnixSeconds t0 = timestamps[rows.front()];
    for (std::size_t i : rows) t0 = std::min(t0, timestamps[i]);
    std::map<std::int64_t, std::vector<std::size_t>> windows;
    for (std::size_t i : rows) windows[(timestamps[i] - t0) / spec.window_length].push_back(i);
    if (windows.size() < 2) {
      throw Error(ErrorCode::kDatasetTooShort,
                  fmt::format("dataset '{}' spans {} window(s); need 2", label, windows.size()));
    }
    const double total = static_cast<double>(rows.size());
    std::size_t take = 0;
    std::size_t cum = 0;
    for (const auto& [w, members] : windows) {
      cum += members.size();
      ++take;
      if (static_cast<double>(cum) / total >= spec.train_fraction) break;
    }
    take = std::min(take, windows.size() - 1);
    std::size_t k = 0;
    for (const auto& [w, members] : windows) {
      auto& side = k++ < take ? out.train : out.test;
      side.insert(side.end(), members.begin(), members.end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed) {
  if (k < 2 || k > n) {
    throw Error(ErrorCode::kBadK, fmt::format("k = {} invalid for {} rows", k, n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t size = n / k + (j < n % k ? 1 : 0);
    folds[j].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                    perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
    std::sort(folds[j].begin(), folds[j].end());
    pos += size;
  }
  return folds;
}

}  // namespace bctrace::eval
