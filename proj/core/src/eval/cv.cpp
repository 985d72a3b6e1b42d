#include <cmath>

#include "bctrace/error.hpp"
#include "bctrace/eval.hpp"

namespace bctrace::eval {
namespace {

// Like metrics() but tolerates single-row folds (leave-one-out).
EvalReport fold_report(std::span<const double> pred, std::span<const double> truth) {
  if (truth.size() >= 2) return metrics(pred, truth);
  EvalReport r;
  r.n = truth.size();
  if (!truth.empty()) {
    r.rmse = std::abs(pred[0] - truth[0]);
    r.mae = r.rmse;
  }
  return r;
}

}  // namespace

CvResult kfold_cv(const model::Dataset& data, std::size_t k, std::uint64_t seed, const FitFn& fit) {
  data.check_shape();
  CvResult out;
  out.fold_indices = kfold_indices(data.rows(), k, seed);
  out.oof_predictions.assign(data.rows(), 0.0);
  std::vector<bool> in_fold(data.rows());
  for (const auto& fold : out.fold_indices) {
    std::fill(in_fold.begin(), in_fold.end(), false);
    for (std::size_t i : fold) in_fold[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (!in_fold[i]) train.push_back(i);
    }
    const auto m = fit(data.subset(train));
    const auto valid = data.subset(fold);
    const auto pred = model::predict(m, valid);
    for (std::size_t j = 0; j < fold.size(); ++j) out.oof_predictions[fold[j]] = pred[j];
    out.folds.push_back(fold_report(pred, valid.y));
  }
  double rmse = 0.0, mae = 0.0, r2 = 0.0;
  bool all_r2 = true;
  for (const auto& f : out.folds) {
    rmse += f.rmse;
    mae += f.mae;
    out.mean.n += f.n;
    if (f.r2) {
      r2 += *f.r2;
    } else {
      all_r2 = false;
    }
  }
  const auto kf = static_cast<double>(out.folds.size());
  out.mean.rmse = rmse / kf;
  out.mean.mae = mae / kf;
  if (all_r2) out.mean.r2 = r2 / kf;
  return out;
}

TrimmedSplit trim_train_side(std::span<const double> target, std::span<const std::string> datasets,
                             const Split& split, const signal::TrimConfig& cfg) {
  if (!datasets.empty() && datasets.size() != target.size()) {
    throw Error(ErrorCode::kLengthMismatch, "one dataset label per row required");
  }
  std::vector<double> values;
  std::vector<std::string> labels;
  for (std::size_t i : split.train) {
    values.push_back(target[i]);
    labels.push_back(datasets.empty() ? std::string() : datasets[i]);
  }
  const auto res = signal::trim_outliers(values, labels, cfg);
  TrimmedSplit out;
  out.split.test = split.test;
  for (std::size_t j : res.kept) out.split.train.push_back(split.train[j]);
  for (auto r : res.removed) {
    r.index = split.train[r.index];
    out.removed.push_back(std::move(r));
  }
  out.bounds = res.bounds;
  return out;
}

}  // namespace bctrace::eval
