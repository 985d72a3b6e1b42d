#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "bctrace/error.hpp"
#include "bctrace/model.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::model;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

Dataset additive(std::mt19937_64& rng, std::size_t rows, double noise) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::normal_distribution<double> g(0, 1);
  Dataset d;
  d.feature_names = {"x0", "x1", "x2", "x3", "x4", "x5"};
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(6);
    for (auto& v : x) v = u(rng);
    const double y = 3 * x[0] + 2 * std::sin(3 * x[1]) + (x[2] > 0.2 ? 1.5 : -0.5) + x[3] * x[3] + noise * g(rng);
    d.push_row(x, y);
  }
  return d;
}

// Exact greedy regression tree grown recursively on explicit index sets:
// every split tries every feature and every midpoint between consecutive
// distinct values. Returns the leaf value for each training row.
struct RefTree {
  const Dataset& d;
  const std::vector<double>& grad;
  double lambda;
  int max_depth;
  int min_split;
  std::vector<double> out;

  void grow(const std::vector<std::size_t>& rows, int depth) {
    double g = 0, h = 0;
    for (auto r : rows) {
      g += grad[r];
      h += 1.0;
    }
    struct Best {
      double gain = 0;
      std::size_t f = 0;
      double thr = 0;
      bool found = false;
    } best;
    if ((max_depth <= 0 || depth < max_depth) && static_cast<int>(rows.size()) >= std::max(2, min_split)) {
      for (std::size_t f = 0; f < d.cols(); ++f) {
        auto sorted = rows;
        std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return d.at(a, f) < d.at(b, f); });
        double gl = 0, hl = 0;
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
          gl += grad[sorted[i]];
          hl += 1.0;
          const double a = d.at(sorted[i], f), b = d.at(sorted[i + 1], f);
          if (!(b > a)) continue;
          const double gain =
              0.5 * (gl * gl / (hl + lambda) + (g - gl) * (g - gl) / (h - hl + lambda) - g * g / (h + lambda));
          if (!best.found || gain > best.gain) best = {gain, f, 0.5 * (a + b), true};
        }
      }
    }
    if (best.found && best.gain > 0.0) {
      std::vector<std::size_t> l, r;
      for (auto i : rows) (d.at(i, best.f) < best.thr ? l : r).push_back(i);
      grow(l, depth + 1);
      grow(r, depth + 1);
      return;
    }
    for (auto r : rows) out[r] = -g / (h + lambda);
  }
};

std::vector<double> ref_tree_outputs(const Dataset& d, const std::vector<double>& grad, double lambda,
                                     int max_depth, int min_split = 2) {
  RefTree t{d, grad, lambda, max_depth, min_split, std::vector<double>(d.rows(), 0.0)};
  std::vector<std::size_t> all(d.rows());
  std::iota(all.begin(), all.end(), 0);
  t.grow(all, 0);
  return t.out;
}

double r_squared(const std::vector<double>& pred, const std::vector<double>& y) {
  const double m = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0, st = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss += (y[i] - pred[i]) * (y[i] - pred[i]);
    st += (y[i] - m) * (y[i] - m);
  }
  return 1.0 - ss / st;
}

}  // namespace

TEST(Tree, MatchesRecursiveExactGreedy) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 15; ++trial) {
    Dataset d;
    d.feature_names = {"a", "b", "c"};
    for (int r = 0; r < 80; ++r) {
      std::vector<double> x{g(rng), g(rng), std::round(3 * g(rng))};
      d.push_row(x, x[0] * x[1] + x[2] + 0.1 * g(rng));
    }
    std::vector<double> grad(d.rows()), hess(d.rows(), 1.0), w(d.rows(), 1.0);
    for (std::size_t i = 0; i < d.rows(); ++i) grad[i] = -d.y[i];
    const double lambda = trial % 3 == 0 ? 0.0 : 1.0;
    const int depth = 1 + trial % 5;
    const int mss = trial % 2 ? 2 : 10;
    const auto tree = grow_tree(d, grad, hess, w, TreeParams{depth, lambda, 0.0, mss});
    const auto expect = ref_tree_outputs(d, grad, lambda, depth, mss);
    EXPECT_LE(tree.depth(), depth);
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_NEAR(tree.predict(d.row(i)), expect[i], 1e-9) << trial;
  }
}

TEST(Tree, MissingValuesFollowTheDefaultBranch) {
  Dataset d;
  d.feature_names = {"a"};
  const double nan = kMissing;
  for (double v : {1.0, 2.0, 3.0, 10.0, 11.0, 12.0}) d.push_row(std::vector<double>{v}, v < 5 ? 0.0 : 10.0);
  d.push_row(std::vector<double>{nan}, 10.0);
  d.push_row(std::vector<double>{nan}, 10.0);
  std::vector<double> grad(d.rows()), hess(d.rows(), 1.0), w(d.rows(), 1.0);
  for (std::size_t i = 0; i < d.rows(); ++i) grad[i] = -d.y[i];
  const auto t = grow_tree(d, grad, hess, w, TreeParams{1, 0.0, 0.0, 2});
  ASSERT_FALSE(t.nodes[0].is_leaf());
  EXPECT_FALSE(t.nodes[0].default_left);
  const std::vector<double> missing{nan};
  EXPECT_DOUBLE_EQ(t.predict(missing), 10.0);
}

TEST(Gbt, TwoPointStump) {
  Dataset d;
  d.feature_names = {"x"};
  d.push_row(std::vector<double>{0.0}, 0.0);
  d.push_row(std::vector<double>{1.0}, 10.0);
  for (double eta : {0.05, 0.3, 1.0}) {
    for (double lambda : {0.0, 1.0}) {
      GbtHyperParams p;
      p.n_estimators = 1;
      p.learning_rate = eta;
      p.max_depth = 1;
      p.lambda = lambda;
      const auto m = fit_gbt(d, p);
      // base 5, gradients -5 and +5 land in separate leaves: w = 5 / (1 + lambda).
      const double w = 5.0 / (1.0 + lambda);
      EXPECT_NEAR(m.base_score, 5.0, 1e-12);
      EXPECT_NEAR(predict_row(m, std::vector<double>{1.0}), 5.0 + eta * w, 1e-9);
      EXPECT_NEAR(predict_row(m, std::vector<double>{0.0}), 5.0 - eta * w, 1e-9);
      EXPECT_EQ(m.trees[0].nodes.size(), 3u);
    }
  }
}

TEST(Gbt, ConstantTargetPredictsTheConstant) {
  Dataset d;
  d.feature_names = {"x"};
  for (int i = 0; i < 20; ++i) d.push_row(std::vector<double>{double(i)}, 7.5);
  const auto m = fit_gbt(d, GbtHyperParams{});
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(predict_row(m, std::vector<double>{i + 0.5}), 7.5, 1e-12);
  for (const auto& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
}

TEST(Gbt, DefaultsFitAnAdditiveFunction) {
  std::mt19937_64 rng(2);
  const auto train = additive(rng, 400, 0.1);
  const auto test = additive(rng, 200, 0.1);
  const auto m = fit_gbt(train, GbtHyperParams{});
  ASSERT_EQ(m.train_rmse.size(), 51u);
  for (std::size_t i = 1; i < m.train_rmse.size(); ++i) EXPECT_LE(m.train_rmse[i], m.train_rmse[i - 1] + 1e-12);
  EXPECT_GE(r_squared(predict(Model{m}, test), test.y), 0.8);
}

TEST(Gbt, BoostingMatchesReferenceLoop) {
  std::mt19937_64 rng(3);
  const auto d = additive(rng, 120, 0.2);
  GbtHyperParams p;
  p.n_estimators = 10;
  p.learning_rate = 0.2;
  p.max_depth = 3;
  const auto m = fit_gbt(d, p);
  const double base = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.rows());
  std::vector<double> pred(d.rows(), base), grad(d.rows());
  for (int round = 0; round < p.n_estimators; ++round) {
    for (std::size_t i = 0; i < d.rows(); ++i) grad[i] = pred[i] - d.y[i];
    const auto step = ref_tree_outputs(d, grad, p.lambda, p.max_depth);
    for (std::size_t i = 0; i < d.rows(); ++i) pred[i] += p.learning_rate * step[i];
  }
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_NEAR(predict_row(m, d.row(i)), pred[i], 1e-9);
}

TEST(Gbt, RowOrderDoesNotMatter) {
  std::mt19937_64 rng(4);
  const auto d = additive(rng, 100, 0.2);
  std::vector<std::size_t> perm(d.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto a = fit_gbt(d, GbtHyperParams{});
  const auto b = fit_gbt(d.subset(perm), GbtHyperParams{});
  EXPECT_EQ(model_to_json(Model{a}), model_to_json(Model{b}));
}

TEST(Gbt, RejectsBadParameters) {
  std::mt19937_64 rng(5);
  const auto d = additive(rng, 10, 0.1);
  GbtHyperParams zero;
  zero.n_estimators = 0;
  EXPECT_EQ(code_of([&] { fit_gbt(d, zero); }), ErrorCode::kBadParams);
  GbtHyperParams eta;
  eta.learning_rate = 0.0;
  EXPECT_EQ(code_of([&] { fit_gbt(d, eta); }), ErrorCode::kBadParams);
  Dataset one;
  one.feature_names = {"x"};
  one.push_row(std::vector<double>{1.0}, 1.0);
  EXPECT_EQ(code_of([&] { fit_gbt(one, GbtHyperParams{}); }), ErrorCode::kTooFewRows);
}

TEST(Forest, SingleUnbootstrappedTreeIsTheExactTree) {
  std::mt19937_64 rng(6);
  const auto d = additive(rng, 90, 0.3);
  const double base = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.rows());
  std::vector<double> grad(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) grad[i] = base - d.y[i];
  for (int depth : {0, 2, 4}) {
    const auto m = fit_forest(d, ForestParams{1, depth, 2, false}, 9);
    const auto expect = ref_tree_outputs(d, grad, 0.0, depth);
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_NEAR(predict_row(m, d.row(i)), base + expect[i], 1e-9);
    EXPECT_FALSE(m.oob_rmse.has_value());
  }
  // Fully grown on distinct rows it interpolates.
  const auto full = fit_forest(d, ForestParams{1, 0, 2, false}, 9);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_NEAR(predict_row(full, d.row(i)), d.y[i], 1e-9);
}

TEST(Forest, OutOfBagErrorFallsWithMoreTrees) {
  std::mt19937_64 rng(7);
  const auto d = additive(rng, 200, 0.3);
  const auto few = fit_forest(d, ForestParams{3, 0, 2, true}, 1);
  const auto many = fit_forest(d, ForestParams{100, 0, 2, true}, 1);
  ASSERT_TRUE(few.oob_rmse && many.oob_rmse);
  EXPECT_LT(*many.oob_rmse, *few.oob_rmse);
}

TEST(Forest, SeedDeterminesTheFit) {
  std::mt19937_64 rng(8);
  const auto d = additive(rng, 60, 0.3);
  EXPECT_EQ(model_to_json(Model{fit_forest(d, ForestParams{10, 4, 2, true}, 3)}),
            model_to_json(Model{fit_forest(d, ForestParams{10, 4, 2, true}, 3)}));
}

TEST(Linear, RecoversAnExactLine) {
  Dataset d;
  d.feature_names = {"x"};
  for (int i = 0; i < 10; ++i) d.push_row(std::vector<double>{double(i)}, 2.0 * i + 1.0);
  const auto m = fit_linear(d);
  EXPECT_NEAR(m.coefficients[0], 2.0, 1e-10);
  EXPECT_NEAR(m.intercept, 1.0, 1e-10);
}

TEST(Linear, ConstantTarget) {
  std::mt19937_64 rng(9);
  const auto d0 = additive(rng, 30, 0.0);
  Dataset d = d0;
  std::fill(d.y.begin(), d.y.end(), 4.0);
  const auto m = fit_linear(d);
  for (double c : m.coefficients) EXPECT_NEAR(c, 0.0, 1e-10);
  EXPECT_NEAR(m.intercept, 4.0, 1e-10);
}

TEST(Linear, ResidualsAreOrthogonalToTheDesign) {
  std::mt19937_64 rng(10);
  const auto d = additive(rng, 200, 0.5);
  const auto m = fit_linear(d);
  std::vector<double> res(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) res[i] = d.y[i] - predict_row(m, d.row(i));
  EXPECT_NEAR(std::accumulate(res.begin(), res.end(), 0.0), 0.0, 1e-8);
  for (std::size_t c = 0; c < d.cols(); ++c) {
    double dot = 0.0;
    for (std::size_t i = 0; i < d.rows(); ++i) dot += d.at(i, c) * res[i];
    EXPECT_NEAR(dot, 0.0, 1e-8);
  }
}

TEST(Linear, CollinearColumnsGetTheMinimumNormSolution) {
  Dataset d;
  d.feature_names = {"x", "x2"};
  for (int i = 0; i < 8; ++i) d.push_row(std::vector<double>{double(i), 2.0 * i}, 2.0 * i);
  const auto m = fit_linear(d);
  // b1 + 2 b2 = 2 with the smallest |b|.
  EXPECT_NEAR(m.coefficients[0], 0.4, 1e-10);
  EXPECT_NEAR(m.coefficients[1], 0.8, 1e-10);
}

TEST(Linear, RejectsMissingFeatures) {
  Dataset d;
  d.feature_names = {"x"};
  d.push_row(std::vector<double>{kMissing}, 1.0);
  d.push_row(std::vector<double>{1.0}, 2.0);
  EXPECT_EQ(code_of([&] { fit_linear(d); }), ErrorCode::kBadParams);
}

TEST(Serialize, RoundTripPreservesPredictions) {
  std::mt19937_64 rng(11);
  auto d = additive(rng, 100, 0.3);
  d.x[5] = kMissing;
  const std::vector<Model> models{Model{fit_gbt(d, GbtHyperParams{})}, Model{fit_forest(d, ForestParams{5, 3, 2, true}, 2)},
                                  Model{fit_linear(additive(rng, 50, 0.1))}};
  for (const auto& m : models) {
    const auto json = model_to_json(m);
    const auto back = model_from_json(json);
    EXPECT_EQ(kind_name(back), kind_name(m));
    EXPECT_EQ(model_to_json(back), json);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      const double a = predict_row(back, d.row(i)), b = predict_row(m, d.row(i));
      // The linear model has no answer for the row with a missing value.
      if (std::isnan(b)) {
        EXPECT_TRUE(std::isnan(a));
      } else {
        EXPECT_EQ(a, b);
      }
    }
  }
}

TEST(Serialize, RejectsForeignDocuments) {
  EXPECT_NE(code_of([] { model_from_json(R"({"format": "other"})"); }), ErrorCode::kInternal);
  EXPECT_NE(code_of([] { model_from_json("not json"); }), ErrorCode::kInternal);
}

TEST(Predict, SchemaMismatch) {
  std::mt19937_64 rng(12);
  const auto d = additive(rng, 20, 0.1);
  const Model m{fit_linear(d)};
  auto other = d;
  std::swap(other.feature_names[0], other.feature_names[1]);
  EXPECT_EQ(code_of([&] { predict(m, other); }), ErrorCode::kSchemaMismatch);
}

TEST(Grid, EnumerationOrderAndCount) {
  const auto spec = parse_grid_json(oracle::slurp(std::filesystem::path(BCTRACE_CONFIG_DIR) / "grid_xgb.json"));
  const auto configs = enumerate_grid(spec);
  ASSERT_EQ(configs.size(), 80u);
  std::set<std::tuple<int, double, int>> distinct;
  for (const auto& c : configs) distinct.insert({c.n_estimators, c.learning_rate, c.max_depth.value_or(-1)});
  EXPECT_EQ(distinct.size(), 80u);
  EXPECT_EQ(configs.front(), (HyperConfig{20, 0.01, 3, 2}));
  EXPECT_EQ(configs[1], (HyperConfig{20, 0.01, 5, 2}));
  EXPECT_EQ(configs.back(), (HyperConfig{250, 0.2, 7, 2}));
}

TEST(Grid, ForestFileAllowsUnlimitedDepth) {
  const auto spec = parse_grid_json(oracle::slurp(std::filesystem::path(BCTRACE_CONFIG_DIR) / "grid_forest.json"));
  EXPECT_EQ(spec.kind, ModelKind::kForest);
  EXPECT_EQ(enumerate_grid(spec).size(), 4u * 6u * 2u);
  EXPECT_FALSE(spec.max_depth.front().has_value());
}

TEST(Grid, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_grid_json(R"({"model": "svm"})"); }), ErrorCode::kBadConfig);
  EXPECT_EQ(code_of([] { parse_grid_json(R"({"model": "xgb", "max_depth": [3]})"); }), ErrorCode::kMissingKey);
  GridSpec empty;
  EXPECT_EQ(code_of([&] { enumerate_grid(empty); }), ErrorCode::kGridEmpty);
}

TEST(Grid, SingletonSelectsItsOnlyConfig) {
  std::mt19937_64 rng(13);
  const auto d = additive(rng, 80, 0.2);
  GridSpec spec{ModelKind::kXgb, {30}, {0.1}, {3}, {2}, 1.0};
  const auto r = grid_search(d, spec, 5, 1);
  EXPECT_EQ(r.best_index, 0u);
  EXPECT_EQ(r.cv_table.size(), 1u);
  EXPECT_EQ(r.cv_table[0].fold_rmse.size(), 5u);
  EXPECT_EQ(model_to_json(r.refit), model_to_json(fit_config(d, ModelKind::kXgb, r.best, 1.0, 1)));
}

TEST(Grid, TiesGoToFewerTreesThenShallower) {
  std::mt19937_64 rng(14);
  const auto d = additive(rng, 50, 0.2);
  // The linear kind ignores tree settings, so every row ties on RMSE.
  GridSpec spec{ModelKind::kLinear, {100, 20}, {1.0}, {5, 3}, {2}, 1.0};
  const auto r = grid_search(d, spec, 5, 1);
  EXPECT_EQ(r.best_index, 3u);
  EXPECT_EQ(r.best, (HyperConfig{20, 1.0, 3, 2}));
}

TEST(Grid, PlantedOptimumWins) {
  // A product interaction plus a step: stumps with a tiny step size cannot
  // fit it, so the deep, fast configuration is the planted winner.
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::uniform_real_distribution<double> u(-1, 1);
    std::normal_distribution<double> g(0, 1);
    Dataset d;
    d.feature_names = {"a", "b", "c"};
    for (int i = 0; i < 150; ++i) {
      std::vector<double> x{u(rng), u(rng), u(rng)};
      d.push_row(x, 4 * x[0] * x[1] + (x[2] > 0 ? 2 : 0) + 0.1 * g(rng));
    }
    GridSpec spec{ModelKind::kXgb, {60}, {0.005, 0.3}, {1, 4}, {2}, 1.0};
    const auto r = grid_search(d, spec, 5, seed);
    wins += r.best == HyperConfig{60, 0.3, 4, 2};
  }
  EXPECT_EQ(wins, 5);
}

TEST(Grid, ThreadCountDoesNotChangeTheResult) {
  std::mt19937_64 rng(15);
  const auto d = additive(rng, 80, 0.2);
  GridSpec spec{ModelKind::kXgb, {10, 20}, {0.1, 0.3}, {2, 3}, {2}, 1.0};
  const auto a = grid_search(d, spec, 4, 2, 1);
  const auto b = grid_search(d, spec, 4, 2, 3);
  EXPECT_EQ(cv_table_csv(a), cv_table_csv(b));
  EXPECT_EQ(model_to_json(a.refit), model_to_json(b.refit));
}
