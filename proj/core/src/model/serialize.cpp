#include <deque>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/error.hpp"
#include "bctrace/model.hpp"

namespace bctrace::model {
namespace {

using ojson = nlohmann::ordered_json;
constexpr int kVersion = 1;

ojson node_json(const Tree& t, int i, const std::vector<std::string>& names) {
  const auto& n = t.nodes[static_cast<std::size_t>(i)];
  ojson j;
  if (n.is_leaf()) {
    j["leaf"] = n.weight;
  } else {
    j["feature"] = names.at(static_cast<std::size_t>(n.feature));
    j["feature_index"] = n.feature;
    j["threshold"] = n.threshold;
    j["default"] = n.default_left ? "left" : "right";
    j["gain"] = n.gain;
  }
  j["grad"] = n.sum_grad;
  j["hess"] = n.sum_hess;
  if (!n.is_leaf()) {
    j["left"] = node_json(t, n.left, names);
    j["right"] = node_json(t, n.right, names);
  }
  return j;
}

ojson tree_json(const Tree& t, const std::vector<std::string>& names) {
  if (t.nodes.empty()) return ojson::object();
  return node_json(t, 0, names);
}

// Children are appended breadth-first, which is the order the learner
// creates them in, so a round trip reproduces the node array exactly.
Tree tree_from(const nlohmann::json& root, std::size_t n_features) {
  Tree t;
  if (root.empty()) return t;
  std::deque<std::pair<const nlohmann::json*, int>> queue;
  t.nodes.emplace_back();
  queue.emplace_back(&root, 0);
  while (!queue.empty()) {
    const auto [j, idx] = queue.front();
    queue.pop_front();
    TreeNode node;
    node.sum_grad = j->value("grad", 0.0);
    node.sum_hess = j->value("hess", 0.0);
    if (j->contains("leaf")) {
      node.weight = j->at("leaf").get<double>();
    } else {
      node.feature = j->at("feature_index").get<int>();
      if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features) {
        throw Error(ErrorCode::kSchemaMismatch, "split feature index out of range");
      }
      node.threshold = j->at("threshold").get<double>();
      const auto side = j->at("default").get<std::string>();
      if (side != "left" && side != "right") {
        throw Error(ErrorCode::kSchemaMismatch, fmt::format("bad default side '{}'", side));
      }
      node.default_left = side == "left";
      node.gain = j->value("gain", 0.0);
      node.left = static_cast<int>(t.nodes.size());
      node.right = node.left + 1;
      t.nodes.emplace_back();
      t.nodes.emplace_back();
      queue.emplace_back(&j->at("left"), node.left);
      queue.emplace_back(&j->at("right"), node.right);
    }
    t.nodes[static_cast<std::size_t>(idx)] = node;
  }
  return t;
}

ojson header(std::string_view kind, const std::vector<std::string>& names) {
  ojson j;
  j["format"] = "bctrace.model";
  j["version"] = kVersion;
  j["kind"] = kind;
  j["feature_names"] = names;
  return j;
}

}  // namespace

std::string model_to_json(const Model& model) {
  ojson j;
  if (const auto* g = std::get_if<GbtModel>(&model)) {
    j = header("gbt", g->feature_names);
    j["params"] = {{"n_estimators", g->params.n_estimators},
                   {"learning_rate", g->params.learning_rate},
                   {"max_depth", g->params.max_depth},
                   {"lambda", g->params.lambda},
                   {"min_split_gain", g->params.min_split_gain},
                   {"min_samples_split", g->params.min_samples_split}};
    j["base_score"] = g->base_score;
    j["learning_rate"] = g->learning_rate;
    j["train_rmse"] = g->train_rmse;
    j["trees"] = ojson::array();
    for (const auto& t : g->trees) j["trees"].push_back(tree_json(t, g->feature_names));
  } else if (const auto* f = std::get_if<ForestModel>(&model)) {
    j = header("forest", f->feature_names);
    j["params"] = {{"n_trees", f->params.n_trees},
                   {"max_depth", f->params.max_depth > 0 ? ojson(f->params.max_depth) : ojson()},
                   {"min_samples_split", f->params.min_samples_split},
                   {"bootstrap", f->params.bootstrap}};
    j["oob_rmse"] = f->oob_rmse ? ojson(*f->oob_rmse) : ojson();
    j["trees"] = ojson::array();
    for (std::size_t i = 0; i < f->trees.size(); ++i) {
      j["trees"].push_back({{"base", f->tree_base[i]}, {"root", tree_json(f->trees[i], f->feature_names)}});
    }
  } else {
    const auto& l = std::get<LinearModel>(model);
    j = header("linear", l.feature_names);
    j["intercept"] = l.intercept;
    j["coefficients"] = l.coefficients;
  }
  return j.dump(1) + "\n";
}

Model model_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", std::string()) != "bctrace.model") {
      throw Error(ErrorCode::kSchemaMismatch, "not a bctrace model document");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw Error(ErrorCode::kSchemaMismatch,
                  fmt::format("unsupported model version {}", j.at("version").dump()));
    }
    const auto kind = j.at("kind").get<std::string>();
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    if (kind == "gbt") {
      GbtModel m;
      m.feature_names = names;
      const auto& p = j.at("params");
      m.params.n_estimators = p.at("n_estimators").get<int>();
      m.params.learning_rate = p.at("learning_rate").get<double>();
      m.params.max_depth = p.at("max_depth").get<int>();
      m.params.lambda = p.at("lambda").get<double>();
      m.params.min_split_gain = p.at("min_split_gain").get<double>();
      m.params.min_samples_split = p.at("min_samples_split").get<int>();
      m.base_score = j.at("base_score").get<double>();
      m.learning_rate = j.at("learning_rate").get<double>();
      m.train_rmse = j.value("train_rmse", std::vector<double>{});
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t, names.size()));
      return m;
    }
    if (kind == "forest") {
      ForestModel m;
      m.feature_names = names;
      const auto& p = j.at("params");
      m.params.n_trees = p.at("n_trees").get<int>();
      m.params.max_depth = p.at("max_depth").is_null() ? 0 : p.at("max_depth").get<int>();
      m.params.min_samples_split = p.at("min_samples_split").get<int>();
      m.params.bootstrap = p.at("bootstrap").get<bool>();
      if (!j.at("oob_rmse").is_null()) m.oob_rmse = j.at("oob_rmse").get<double>();
      for (const auto& t : j.at("trees")) {
        m.tree_base.push_back(t.at("base").get<double>());
        m.trees.push_back(tree_from(t.at("root"), names.size()));
      }
      return m;
    }
    if (kind == "linear") {
      LinearModel m;
      m.feature_names = names;
      m.intercept = j.at("intercept").get<double>();
      m.coefficients = j.at("coefficients").get<std::vector<double>>();
      if (m.coefficients.size() != names.size()) {
        throw Error(ErrorCode::kSchemaMismatch, "coefficient count differs from feature count");
      }
      return m;
    }
    throw Error(ErrorCode::kSchemaMismatch, fmt::format("unknown model kind '{}'", kind));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("model: {}", e.what()));
  } catch (const nlohmann::json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("model: {}", e.what()));
  } catch (const nlohmann::json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("model: {}", e.what()));
  }
}

}  // namespace bctrace::model
