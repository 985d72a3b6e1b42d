#include <algorithm>
#include <atomic>
#include <limits>
#include <mutex>
#include <tuple>
#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/eval.hpp"
#include "bctrace/model.hpp"
#include "tree_internal.hpp"

namespace bctrace::model {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::kXgb: return "xgb";
    case ModelKind::kGb: return "gb";
    case ModelKind::kForest: return "forest";
    case ModelKind::kLinear: return "linear";
  }
  return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "xgb" || s == "gbt") return ModelKind::kXgb;
  if (s == "gb") return ModelKind::kGb;
  if (s == "forest" || s == "rf") return ModelKind::kForest;
  if (s == "linear" || s == "lr") return ModelKind::kLinear;
  return std::nullopt;
}

GridSpec parse_grid_json(std::string_view text) {
  GridSpec g;
  try {
    const auto j = nlohmann::json::parse(text);
    const auto name = j.at("model").get<std::string>();
    const auto kind = parse_model_kind(name);
    if (!kind) throw Error(ErrorCode::kBadConfig, fmt::format("unknown model kind '{}'", name));
    g.kind = *kind;
    const bool boosted = g.kind == ModelKind::kXgb || g.kind == ModelKind::kGb;
    const bool treed = g.kind != ModelKind::kLinear;
    auto list = [&](const char* key, bool required, auto fallback) {
      using T = decltype(fallback);
      if (!j.contains(key)) {
        if (required) throw Error(ErrorCode::kMissingKey, fmt::format("grid lacks '{}'", key));
        return std::vector<T>{fallback};
      }
      std::vector<T> out;
      for (const auto& v : j.at(key)) {
        if constexpr (std::is_same_v<T, std::optional<int>>) {
          out.push_back(v.is_null() ? std::nullopt : std::optional<int>(v.get<int>()));
        } else {
          out.push_back(v.get<T>());
        }
      }
      return out;
    };
    g.n_estimators = list("n_estimators", treed, 1);
    g.learning_rate = list("learning_rate", boosted, 1.0);
    g.max_depth = list("max_depth", treed, std::optional<int>{});
    g.min_samples_split = list("min_samples_split", false, 2);
    g.lambda = j.value("lambda", g.kind == ModelKind::kGb ? 0.0 : 1.0);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("grid: {}", e.what()));
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("grid: {}", e.what()));
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("grid: {}", e.what()));
  }
  return g;
}

std::vector<HyperConfig> enumerate_grid(const GridSpec& spec) {
  if (spec.n_estimators.empty() || spec.learning_rate.empty() || spec.max_depth.empty() ||
      spec.min_samples_split.empty()) {
    throw Error(ErrorCode::kGridEmpty, "every grid dimension needs at least one value");
  }
  std::vector<HyperConfig> out;
  for (int n : spec.n_estimators) {
    for (double lr : spec.learning_rate) {
      for (const auto& d : spec.max_depth) {
        for (int mss : spec.min_samples_split) out.push_back(HyperConfig{n, lr, d, mss});
      }
    }
  }
  return out;
}

Model fit_config(const Dataset& data, ModelKind kind, const HyperConfig& cfg, double lambda,
                 std::uint64_t seed) {
  switch (kind) {
    case ModelKind::kXgb:
    case ModelKind::kGb: {
      if (!cfg.max_depth) throw Error(ErrorCode::kBadParams, "boosted trees need a finite max_depth");
      GbtHyperParams p;
      p.n_estimators = cfg.n_estimators;
      p.learning_rate = cfg.learning_rate;
      p.max_depth = *cfg.max_depth;
      p.lambda = kind == ModelKind::kGb ? 0.0 : lambda;
      p.min_samples_split = cfg.min_samples_split;
      return fit_gbt(data, p, seed);
    }
    case ModelKind::kForest: {
      ForestParams p;
      p.n_trees = cfg.n_estimators;
      p.max_depth = cfg.max_depth.value_or(0);
      p.min_samples_split = cfg.min_samples_split;
      return fit_forest(data, p, seed);
    }
    case ModelKind::kLinear:
      return fit_linear(data);
  }
  throw Error(ErrorCode::kInternal, "unhandled model kind");
}

namespace {

// Unlimited depth sorts as the deepest.
int depth_key(const std::optional<int>& d) { return d ? *d : std::numeric_limits<int>::max(); }

}  // namespace

GridResult grid_search(const Dataset& data, const GridSpec& spec, std::size_t k,
                       std::uint64_t seed, unsigned threads) {
  data.check_shape();
  const auto configs = enumerate_grid(spec);
  const auto folds = eval::kfold_indices(data.rows(), k, seed);
  std::vector<Dataset> train_sets, valid_sets;
  for (const auto& fold : folds) {
    std::vector<bool> in(data.rows(), false);
    for (std::size_t i : fold) in[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (!in[i]) train.push_back(i);
    }
    train_sets.push_back(data.subset(train));
    valid_sets.push_back(data.subset(fold));
  }

  GridResult result;
  result.cv_table.resize(configs.size());
  auto evaluate = [&](std::size_t c) {
    CvRow row;
    row.config = configs[c];
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto m = fit_config(train_sets[f], spec.kind, configs[c], spec.lambda, seed);
      row.fold_rmse.push_back(detail::rmse(predict(m, valid_sets[f]), valid_sets[f].y));
    }
    double s = 0.0;
    for (double v : row.fold_rmse) s += v;
    row.mean_rmse = s / static_cast<double>(row.fold_rmse.size());
    double ss = 0.0;
    for (double v : row.fold_rmse) ss += (v - row.mean_rmse) * (v - row.mean_rmse);
    row.std_rmse = std::sqrt(ss / static_cast<double>(row.fold_rmse.size()));
    result.cv_table[c] = std::move(row);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(configs.size())));
  if (workers == 1) {
    for (std::size_t c = 0; c < configs.size(); ++c) evaluate(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c; (c = next.fetch_add(1)) < configs.size();) {
          try {
            evaluate(c);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < configs.size(); ++c) {
    const auto& a = result.cv_table[c];
    const auto& b = result.cv_table[best];
    const auto key_a = std::make_tuple(a.mean_rmse, a.config.n_estimators, depth_key(a.config.max_depth));
    const auto key_b = std::make_tuple(b.mean_rmse, b.config.n_estimators, depth_key(b.config.max_depth));
    if (key_a < key_b) best = c;
  }
  result.best_index = best;
  result.best = configs[best];
  result.refit = fit_config(data, spec.kind, result.best, spec.lambda, seed);
  return result;
}

std::string cv_table_csv(const GridResult& result) {
  std::size_t k = result.cv_table.empty() ? 0 : result.cv_table.front().fold_rmse.size();
  std::string out = "config,n_estimators,learning_rate,max_depth,min_samples_split,mean_rmse,std_rmse";
  for (std::size_t f = 0; f < k; ++f) out += fmt::format(",fold{}_rmse", f + 1);
  out += ",best\n";
  for (std::size_t c = 0; c < result.cv_table.size(); ++c) {
    const auto& r = result.cv_table[c];
    out += fmt::format("{},{},{},{},{},{},{}", c, r.config.n_estimators, r.config.learning_rate,
                       r.config.max_depth ? fmt::format("{}", *r.config.max_depth) : "none",
                       r.config.min_samples_split, r.mean_rmse, r.std_rmse);
    for (double v : r.fold_rmse) out += fmt::format(",{}", v);
    out += c == result.best_index ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace bctrace::model
