#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctrace/bc_signal.hpp"
#include "bctrace/dataset.hpp"
#include "bctrace/model.hpp"
#include "bctrace/time.hpp"

namespace bctrace::eval {

enum class SplitKind { kStratified, kWindowed, kKfold };
std::string_view to_string(SplitKind k);
std::optional<SplitKind> parse_split_kind(std::string_view s);

struct SplitSpec {
  SplitKind kind = SplitKind::kStratified;
  double train_fraction = 0.75;
  std::int64_t window_length = 900;  // seconds
  std::size_t k = 5;
  std::size_t strata_bins = 10;
  std::uint64_t seed = 0;
};

// Row indices into the table, each side ascending.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Strata are target-rank quantile bins. Each stratum is shuffled with the
// seeded generator and its train quota set by largest-remainder apportionment
// of round(train_fraction * n).
Split stratified_split(std::span<const double> target, const SplitSpec& spec);

// Per dataset label: consecutive windows of window_length seconds from the
// dataset's first timestamp; the fewest leading windows reaching
// train_fraction of that dataset's rows go to train (always leaving at least
// one test window).
Split windowed_split(std::span<const UnixSeconds> timestamps,
                     std::span<const std::string> datasets, const SplitSpec& spec);

// k near-equal validation folds over a seeded permutation of [0, n).
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k,
                                                    std::uint64_t seed);

struct EvalReport {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // nullopt when the truth has zero variance
  std::size_t n = 0;
  std::optional<double> t_stat;
  std::optional<double> p_value;
  std::string comparator;
};

// Throws kLengthMismatch on unequal lengths or fewer than 2 points.
EvalReport metrics(std::span<const double> pred, std::span<const double> truth);

struct Comparison {
  double t_stat = 0.0;
  double p_value = 1.0;
};

// Two-sided paired t-test on squared errors (errors = prediction - truth).
// Zero variance of the differences gives p = 1 when their mean is 0 and
// p = 0 otherwise.
Comparison compare_models(std::span<const double> errors_a, std::span<const double> errors_b);

using FitFn = std::function<model::Model(const model::Dataset&)>;

struct CvResult {
  std::vector<EvalReport> folds;
  EvalReport mean;  // fold-averaged rmse, mae and r2
  std::vector<std::vector<std::size_t>> fold_indices;
  std::vector<double> oof_predictions;  // out-of-fold, indexed by row
};

CvResult kfold_cv(const model::Dataset& data, std::size_t k, std::uint64_t seed, const FitFn& fit);

// Trims outliers from the train side only; the test side is returned as is.
struct TrimmedSplit {
  Split split;
  std::vector<signal::RemovedRow> removed;  // indices refer to the full table
  std::vector<signal::TrimBounds> bounds;
};
TrimmedSplit trim_train_side(std::span<const double> target, std::span<const std::string> datasets,
                             const Split& split, const signal::TrimConfig& cfg);

}  // namespace bctrace::eval
