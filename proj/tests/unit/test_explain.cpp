#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "bctrace/error.hpp"
#include "bctrace/explain.hpp"
#include "oracles.hpp"

using namespace bctrace;
using namespace bctrace::explain;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

model::Dataset table(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                     const std::function<double(const std::vector<double>&)>& f) {
  std::uniform_real_distribution<double> u(-1, 1);
  model::Dataset d;
  for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("f" + std::to_string(c + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(cols);
    for (auto& v : x) v = u(rng);
    d.push_row(x, f(x));
  }
  return d;
}

double mean_prediction(const model::Model& m, const model::Dataset& bg) {
  double s = 0.0;
  for (std::size_t r = 0; r < bg.rows(); ++r) s += model::predict_row(m, bg.row(r));
  return s / static_cast<double>(bg.rows());
}

model::GbtHyperParams small_gbt() {
  model::GbtHyperParams p;
  p.n_estimators = 20;
  p.learning_rate = 0.2;
  p.max_depth = 3;
  return p;
}

}  // namespace

TEST(Shapley, SingleFeatureGetsTheWholeDifference) {
  std::mt19937_64 rng(1);
  const auto d = table(rng, 50, 1, [](const auto& x) { return x[0] * x[0]; });
  const model::Model m{model::fit_gbt(d, small_gbt())};
  const std::vector<double> row{0.7};
  const auto r = shapley_exact(m, row, d);
  EXPECT_NEAR(r.phi[0], model::predict_row(m, row) - mean_prediction(m, d), 1e-12);
}

TEST(Shapley, DummyFeatureGetsZero) {
  std::mt19937_64 rng(2);
  auto d = table(rng, 120, 4, [](const auto& x) { return 2 * x[0] + x[1] * x[2]; });
  // f4 never influences the target, and the trees are grown without it.
  model::Dataset no_dummy;
  no_dummy.feature_names = {"f1", "f2", "f3"};
  for (std::size_t r = 0; r < d.rows(); ++r) {
    no_dummy.push_row(std::vector<double>{d.at(r, 0), d.at(r, 1), d.at(r, 2)}, d.y[r]);
  }
  auto gbt = model::fit_gbt(no_dummy, small_gbt());
  gbt.feature_names = d.feature_names;
  const model::Model m{gbt};
  for (std::size_t r = 0; r < 10; ++r) {
    const auto rep = shapley_exact(m, d.row(r), d);
    EXPECT_EQ(rep.phi[3], 0.0);
    const auto en = shapley_exact(m, d.row(r), d, r, ShapMethod::kEnumeration);
    EXPECT_NEAR(en.phi[3], 0.0, 1e-12);
  }
}

TEST(Shapley, EfficiencyOnEveryRow) {
  std::mt19937_64 rng(3);
  const auto d = table(rng, 100, 6, [](const auto& x) { return x[0] + std::sin(3 * x[1]) + x[2] * x[3] - x[5]; });
  const model::Model m{model::fit_gbt(d, model::GbtHyperParams{})};
  const auto bg = select_background(d, 50, 7);
  const double base = mean_prediction(m, bg);
  const auto reports = shapley_rows(m, d, bg);
  ASSERT_EQ(reports.size(), 100u);
  for (const auto& r : reports) {
    const double sum = std::accumulate(r.phi.begin(), r.phi.end(), 0.0);
    EXPECT_NEAR(r.base_value, base, 1e-9);
    EXPECT_NEAR(r.base_value + sum, r.prediction, 1e-9);
    EXPECT_EQ(r.prediction, model::predict_row(m, d.row(r.row_id)));
  }
}

TEST(Shapley, ThreeRoutesAgree) {
  std::mt19937_64 rng(4);
  const auto d = table(rng, 60, 5, [](const auto& x) { return x[0] * x[1] + (x[2] > 0 ? 1 : 0) + 0.5 * x[4]; });
  const auto bg = select_background(d, 20, 1);
  const std::vector<model::Model> models{
      model::Model{model::fit_gbt(d, small_gbt())},
      model::Model{model::fit_forest(d, model::ForestParams{8, 4, 2, true}, 3)},
      model::Model{model::fit_linear(d)},
  };
  for (const auto& m : models) {
    for (std::size_t r = 0; r < 4; ++r) {
      const auto row = d.row(r * 13);
      const auto fast = shapley_exact(m, row, bg, r, ShapMethod::kAuto);
      const auto brute = shapley_exact(m, row, bg, r, ShapMethod::kEnumeration);
      const auto perm = oracle::permutation_shapley(
          [&](std::span<const double> z) { return model::predict_row(m, z); }, row, bg);
      for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(fast.phi[i], brute.phi[i], 1e-9) << model::kind_name(m) << " f" << i;
        EXPECT_NEAR(brute.phi[i], perm[i], 1e-9) << model::kind_name(m) << " f" << i;
      }
    }
  }
}

TEST(Shapley, LinearModelClosedForm) {
  std::mt19937_64 rng(5);
  const auto d = table(rng, 40, 3, [](const auto& x) { return 2 * x[0] - 3 * x[1] + 0.5 * x[2] + 1; });
  const auto lin = model::fit_linear(d);
  const model::Model m{lin};
  const std::vector<double> row{0.3, -0.2, 0.9};
  const auto r = shapley_exact(m, row, d);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto col = d.column(i);
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    EXPECT_NEAR(r.phi[i], lin.coefficients[i] * (row[i] - mean), 1e-12);
  }
}

TEST(Shapley, PlantedStrongFeatureRanksFirst) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0, 0.05);
  const auto d = table(rng, 300, 3, [&](const auto& x) { return 5 * x[0] + x[1] + g(rng); });
  const model::Model m{model::fit_gbt(d, model::GbtHyperParams{})};
  const auto reports = shapley_rows(m, d, select_background(d, 100, 2));
  const auto imp = global_importance(reports);
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].feature, "f1");
  EXPECT_EQ(imp[1].feature, "f2");
  EXPECT_GT(imp[0].mean_abs, 3 * imp[1].mean_abs);
  EXPECT_LT(imp[2].mean_abs, 0.2 * imp[1].mean_abs);
}

TEST(Importance, MeanAbsoluteValuesSortedWithNameTies) {
  std::vector<ShapReport> reports(2);
  for (auto& r : reports) r.feature_names = {"b", "a", "c"};
  reports[0].phi = {1.0, -1.0, 0.5};
  reports[1].phi = {-1.0, 1.0, -2.5};
  const auto imp = global_importance(reports);
  ASSERT_EQ(imp.size(), 3u);
  EXPECT_EQ(imp[0].feature, "c");
  EXPECT_DOUBLE_EQ(imp[0].mean_abs, 1.5);
  EXPECT_EQ(imp[1].feature, "a");
  EXPECT_EQ(imp[2].feature, "b");
}

TEST(Background, CapAndSeededSample) {
  std::mt19937_64 rng(7);
  const auto d = table(rng, 30, 2, [](const auto& x) { return x[0]; });
  EXPECT_EQ(select_background(d, 100, 1).x, d.x);
  const auto a = select_background(d, 10, 1);
  EXPECT_EQ(a.rows(), 10u);
  EXPECT_EQ(select_background(d, 10, 1).x, a.x);
  // Sampled rows keep table order.
  std::vector<std::size_t> pos;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t s = 0; s < d.rows(); ++s) {
      if (d.at(s, 0) == a.at(r, 0)) pos.push_back(s);
    }
  }
  ASSERT_EQ(pos.size(), 10u);
  EXPECT_TRUE(std::is_sorted(pos.begin(), pos.end()));
}

TEST(Shapley, ThreadsGiveIdenticalResults) {
  std::mt19937_64 rng(8);
  const auto d = table(rng, 40, 4, [](const auto& x) { return x[0] * x[3]; });
  const model::Model m{model::fit_gbt(d, small_gbt())};
  const auto one = shapley_rows(m, d, d, ShapMethod::kAuto, 1);
  const auto four = shapley_rows(m, d, d, ShapMethod::kAuto, 4);
  for (std::size_t r = 0; r < one.size(); ++r) EXPECT_EQ(one[r].phi, four[r].phi);
}

TEST(Shapley, Errors) {
  std::mt19937_64 rng(9);
  const auto d = table(rng, 20, 2, [](const auto& x) { return x[0]; });
  const model::Model m{model::fit_linear(d)};
  model::Dataset empty;
  empty.feature_names = d.feature_names;
  EXPECT_EQ(code_of([&] { shapley_exact(m, d.row(0), empty); }), ErrorCode::kEmptyBackground);
  const std::vector<double> short_row{1.0};
  EXPECT_EQ(code_of([&] { shapley_exact(m, short_row, d); }), ErrorCode::kLengthMismatch);
  auto wide = table(rng, 5, 16, [](const auto& x) { return x[0]; });
  model::LinearModel big;
  big.feature_names = wide.feature_names;
  big.coefficients.assign(16, 1.0);
  EXPECT_EQ(code_of([&] { shapley_exact(model::Model{big}, wide.row(0), wide); }), ErrorCode::kTooManyFeatures);
}

TEST(Csv, LongFormat) {
  std::vector<ShapReport> reports(1);
  reports[0].row_id = 0;
  reports[0].feature_names = {"a", "b"};
  reports[0].phi = {0.5, -0.25};
  model::Dataset rows;
  rows.feature_names = {"a", "b"};
  rows.push_row(std::vector<double>{3, 4}, 0);
  EXPECT_EQ(shap_csv(reports, rows), "row_id,feature,value,phi\n0,a,3,0.5\n0,b,4,-0.25\n");
}
