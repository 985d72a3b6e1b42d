#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bctrace/dataset.hpp"

namespace bctrace::model {

// Flat binary tree; node 0 is the root. A row goes left when
// x[feature] < threshold, and to the default side when x[feature] is NaN.
struct TreeNode {
  int feature = -1;  // -1 for a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool default_left = true;
  double weight = 0.0;  // leaf output
  // Gradient and hessian sums over the fit-time samples reaching the node.
  double sum_grad = 0.0;
  double sum_hess = 0.0;
  double gain = 0.0;  // split gain, 0 for leaves

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> row) const;
  int leaf_index(std::span<const double> row) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct TreeParams {
  int max_depth = 5;  // <= 0 means unlimited
  double lambda = 1.0;
  double min_split_gain = 0.0;
  int min_samples_split = 2;
};

// Exact greedy growth on per-row gradients and hessians. `weights` holds an
// integer multiplicity per row (bootstrap counts; 0 excludes the row).
Tree grow_tree(const Dataset& data, std::span<const double> grad,
               std::span<const double> hess, std::span<const double> weights,
               const TreeParams& params);

// Rows ordered lexicographically by (features..., target) with NaN last; fit
// routines train on this order so the result does not depend on input order.
std::vector<std::size_t> canonical_order(const Dataset& data);

struct GbtHyperParams {
  int n_estimators = 50;
  double learning_rate = 0.05;
  int max_depth = 5;
  double lambda = 1.0;
  double min_split_gain = 0.0;
  int min_samples_split = 2;
};

struct GbtModel {
  std::vector<std::string> feature_names;
  GbtHyperParams params;
  double base_score = 0.0;
  double learning_rate = 0.05;
  std::vector<Tree> trees;
  std::vector<double> train_rmse;  // after each round; element 0 = base only
};

// Squared-error boosting: g = yhat - y, h = 1.
GbtModel fit_gbt(const Dataset& data, const GbtHyperParams& params, std::uint64_t seed = 0);

struct ForestParams {
  int n_trees = 100;
  int max_depth = 0;  // unlimited
  int min_samples_split = 2;
  bool bootstrap = true;
};

struct ForestModel {
  std::vector<std::string> feature_names;
  ForestParams params;
  std::vector<Tree> trees;
  std::vector<double> tree_base;  // per-tree sample mean added to its output
  std::optional<double> oob_rmse;
};

ForestModel fit_forest(const Dataset& data, const ForestParams& params, std::uint64_t seed);

struct LinearModel {
  std::vector<std::string> feature_names;
  double intercept = 0.0;
  std::vector<double> coefficients;
};

// Minimum-norm least squares. Rejects missing values.
LinearModel fit_linear(const Dataset& data);

using Model = std::variant<GbtModel, ForestModel, LinearModel>;

const std::vector<std::string>& feature_names(const Model& m);
std::string_view kind_name(const Model& m);

double predict_row(const GbtModel& m, std::span<const double> row);
double predict_row(const ForestModel& m, std::span<const double> row);
double predict_row(const LinearModel& m, std::span<const double> row);
double predict_row(const Model& m, std::span<const double> row);

// Throws kSchemaMismatch unless `data` has the model's feature names in order.
std::vector<double> predict(const Model& m, const Dataset& data);

// Versioned JSON document ("format": "bctrace.model").
std::string model_to_json(const Model& m);
Model model_from_json(std::string_view text);

// Hyperparameter search.
enum class ModelKind { kXgb, kGb, kForest, kLinear };
std::string_view to_string(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view s);

struct HyperConfig {
  int n_estimators = 50;
  double learning_rate = 0.05;
  std::optional<int> max_depth = 5;  // nullopt = unlimited
  int min_samples_split = 2;
  bool operator==(const HyperConfig&) const = default;
};

struct GridSpec {
  ModelKind kind = ModelKind::kXgb;
  std::vector<int> n_estimators;
  std::vector<double> learning_rate;
  std::vector<std::optional<int>> max_depth;
  std::vector<int> min_samples_split;
  double lambda = 1.0;  // used by the xgb kind
};

// {"model": "xgb", "n_estimators": [...], "learning_rate": [...],
//  "max_depth": [3, null, ...], "min_samples_split": [...], "lambda": 1}.
// Lists a model kind does not use may be omitted.
GridSpec parse_grid_json(std::string_view text);

// Cartesian product, n_estimators outermost, min_samples_split innermost.
std::vector<HyperConfig> enumerate_grid(const GridSpec& spec);

Model fit_config(const Dataset& data, ModelKind kind, const HyperConfig& cfg, double lambda,
                 std::uint64_t seed);

struct CvRow {
  HyperConfig config;
  std::vector<double> fold_rmse;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};

struct GridResult {
  std::vector<CvRow> cv_table;  // grid order
  std::size_t best_index = 0;
  HyperConfig best;
  Model refit;
};

// k-fold CV over every configuration (same folds for all), best = lowest mean
// RMSE with ties to fewer trees, then shallower depth, then grid order; the
// winner is refit on all of `data`. `threads` > 1 evaluates configurations
// concurrently; the result does not depend on it.
GridResult grid_search(const Dataset& data, const GridSpec& spec, std::size_t k,
                       std::uint64_t seed, unsigned threads = 1);

std::string cv_table_csv(const GridResult& result);

}  // namespace bctrace::model
