#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "bctrace/error.hpp"
#include "bctrace/explain.hpp"

namespace bctrace::explain {
namespace {

using model::Dataset;
using model::Tree;

// weight[s] = s! (F - s - 1)! / F!
std::vector<double> coalition_weights(std::size_t f) {
  std::vector<double> fact(f + 1, 1.0);
  for (std::size_t i = 1; i <= f; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> w(f, 0.0);
  for (std::size_t s = 0; s < f; ++s) w[s] = fact[s] * fact[f - s - 1] / fact[f];
  return w;
}

void check_inputs(const model::Model& m, std::span<const double> row, const Dataset& background) {
  const auto& names = model::feature_names(m);
  if (names.size() > kMaxFeatures) {
    throw Error(ErrorCode::kTooManyFeatures,
                fmt::format("{} features exceed the enumeration bound of {}", names.size(),
                            kMaxFeatures));
  }
  if (background.rows() == 0) throw Error(ErrorCode::kEmptyBackground, "background is empty");
  if (background.feature_names != names) {
    throw Error(ErrorCode::kSchemaMismatch, "background columns differ from the model features");
  }
  if (row.size() != names.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("row has {} values, model has {} features", row.size(), names.size()));
  }
}

void enumerate(const model::Model& m, std::span<const double> row, const Dataset& bg,
               ShapReport& out) {
  const std::size_t f = row.size();
  const std::size_t subsets = std::size_t{1} << f;
  std::vector<double> v(subsets, 0.0);
  std::vector<double> composite(f);
  for (std::size_t s = 0; s < subsets; ++s) {
    double sum = 0.0;
    for (std::size_t b = 0; b < bg.rows(); ++b) {
      const auto brow = bg.row(b);
      for (std::size_t i = 0; i < f; ++i) composite[i] = (s >> i & 1U) ? row[i] : brow[i];
      sum += model::predict_row(m, composite);
    }
    v[s] = sum / static_cast<double>(bg.rows());
  }
  const auto w = coalition_weights(f);
  out.base_value = v[0];
  for (std::size_t i = 0; i < f; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      phi += w[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
    out.phi[i] = phi;
  }
}

// With the row x and one background row b fixed, a tree's output over
// coalitions S is a sum of leaf games v * [A subset of S] * [B disjoint from
// S], where A (B) collects the features whose split sends x (b) one way and
// the other row the other way along the path. Such a game has the closed-form
// Shapley values used in `leaf`.
struct TreeGame {
  const Tree& tree;
  std::span<const double> x;
  std::span<const double> b;
  const std::vector<double>& fact;
  double scale;  // multiplier on this tree's output, already divided by |background|
  std::vector<double>& phi;
  double& base;

  static bool goes_left(const model::TreeNode& n, double v) {
    return std::isnan(v) ? n.default_left : v < n.threshold;
  }

  void leaf(double value, std::uint32_t a_set, std::uint32_t b_set) const {
    const int a = std::popcount(a_set);
    const int c = std::popcount(b_set);
    const double v = scale * value;
    if (a == 0) base += v;
    if (a > 0) {
      const double share = v * fact[a - 1] * fact[c] / fact[a + c];
      for (std::uint32_t s = a_set; s; s &= s - 1) phi[std::countr_zero(s)] += share;
    }
    if (c > 0) {
      const double share = v * fact[a] * fact[c - 1] / fact[a + c];
      for (std::uint32_t s = b_set; s; s &= s - 1) phi[std::countr_zero(s)] -= share;
    }
  }

  void walk(int i, std::uint32_t a_set, std::uint32_t b_set) const {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      leaf(n.weight, a_set, b_set);
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    const bool xl = goes_left(n, x[f]);
    const bool bl = goes_left(n, b[f]);
    const int x_child = xl ? n.left : n.right;
    const int b_child = bl ? n.left : n.right;
    const std::uint32_t bit = 1U << f;
    if (x_child == b_child || (a_set & bit)) {
      walk(x_child, a_set, b_set);
    } else if (b_set & bit) {
      walk(b_child, a_set, b_set);
    } else {
      walk(x_child, a_set | bit, b_set);
      walk(b_child, a_set, b_set | bit);
    }
  }
};

void tree_ensemble(const std::vector<Tree>& trees, std::span<const double> tree_scale,
                   std::span<const double> row, const Dataset& bg, double offset,
                   ShapReport& out) {
  std::vector<double> fact(2 * kMaxFeatures + 2, 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  double base = offset;
  const double nb = static_cast<double>(bg.rows());
  for (std::size_t t = 0; t < trees.size(); ++t) {
    if (trees[t].nodes.empty()) continue;
    for (std::size_t r = 0; r < bg.rows(); ++r) {
      TreeGame g{trees[t], row, bg.row(r), fact, tree_scale[t] / nb, out.phi, base};
      g.walk(0, 0, 0);
    }
  }
  out.base_value = base;
}

}  // namespace

ShapReport shapley_exact(const model::Model& m, std::span<const double> row,
                         const Dataset& background, std::size_t row_id, ShapMethod method) {
  check_inputs(m, row, background);
  ShapReport out;
  out.row_id = row_id;
  out.feature_names = model::feature_names(m);
  out.phi.assign(row.size(), 0.0);
  out.prediction = model::predict_row(m, row);
  if (method == ShapMethod::kEnumeration) {
    enumerate(m, row, background, out);
  } else if (const auto* g = std::get_if<model::GbtModel>(&m)) {
    const std::vector<double> scale(g->trees.size(), g->learning_rate);
    tree_ensemble(g->trees, scale, row, background, g->base_score, out);
  } else if (const auto* f = std::get_if<model::ForestModel>(&m)) {
    const double share = f->trees.empty() ? 0.0 : 1.0 / static_cast<double>(f->trees.size());
    const std::vector<double> scale(f->trees.size(), share);
    double offset = 0.0;
    for (double b : f->tree_base) offset += share * b;
    tree_ensemble(f->trees, scale, row, background, offset, out);
  } else {
    // An additive model: each feature's game is beta_i (x_i - b_i).
    const auto& l = std::get<model::LinearModel>(m);
    out.base_value = l.intercept;
    for (std::size_t i = 0; i < row.size(); ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < background.rows(); ++r) mean += background.at(r, i);
      mean /= static_cast<double>(background.rows());
      out.base_value += l.coefficients[i] * mean;
      out.phi[i] = l.coefficients[i] * (row[i] - mean);
    }
  }
  return out;
}

std::vector<ShapReport> shapley_rows(const model::Model& m, const Dataset& rows,
                                     const Dataset& background, ShapMethod method,
                                     unsigned threads) {
  rows.check_shape();
  std::vector<ShapReport> out(rows.rows());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(rows.rows())));
  if (workers <= 1) {
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      out[r] = shapley_exact(m, rows.row(r), background, r, method);
    }
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r; (r = next.fetch_add(1)) < rows.rows();) {
        try {
          out[r] = shapley_exact(m, rows.row(r), background, r, method);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<Importance> global_importance(std::span<const ShapReport> reports) {
  std::vector<Importance> out;
  if (reports.empty()) return out;
  const auto& names = reports.front().feature_names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    double s = 0.0;
    for (const auto& r : reports) s += std::abs(r.phi.at(i));
    out.push_back({names[i], s / static_cast<double>(reports.size())});
  }
  std::sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
    return a.feature < b.feature;
  });
  return out;
}

Dataset select_background(const Dataset& train, std::size_t cap, std::uint64_t seed) {
  if (train.rows() <= cap) return train;
  std::vector<std::size_t> idx(train.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return train.subset(idx);
}

std::string shap_csv(std::span<const ShapReport> reports, const Dataset& rows) {
  std::string out = "row_id,feature,value,phi\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.phi.size(); ++i) {
      out += fmt::format("{},{},{},{}\n", r.row_id, r.feature_names[i], rows.at(r.row_id, i), r.phi[i]);
    }
  }
  return out;
}

}  // namespace bctrace::explain
