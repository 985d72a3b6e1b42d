#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/pipeline.hpp"

namespace bctrace::pipeline {
namespace {

using ojson = nlohmann::ordered_json;

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(); }

ojson metrics_json(const eval::EvalReport& r) {
  return {{"rmse", r.rmse}, {"mae", r.mae}, {"r2", opt(r.r2)}, {"n", r.n}};
}

ojson hyper_json(const model::HyperConfig& c) {
  return {{"n_estimators", c.n_estimators},
          {"learning_rate", c.learning_rate},
          {"max_depth", c.max_depth ? ojson(*c.max_depth) : ojson()},
          {"min_samples_split", c.min_samples_split}};
}

nlohmann::json parse_report(std::string_view text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.value("format", std::string()) != "bctrace.report") {
      throw Error(ErrorCode::kSchemaMismatch, "not a bctrace.report document");
    }
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRow, fmt::format("report: {}", e.what()));
  }
}

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  return fmt::format("{}", v.get<double>());
}

}  // namespace

std::string report_json(const ReportInputs& in, const Provenance& p) {
  if (in.evaluation == nullptr) throw Error(ErrorCode::kInternal, "report without an evaluation");
  const auto& ev = *in.evaluation;
  ojson j;
  j["provenance"] = {{"config_hash", p.config_hash}, {"seed", p.seed}};
  j["format"] = "bctrace.report";
  j["version"] = 1;
  j["model"] = in.model_kind;
  j["candidate_features"] = ev.candidate_features;
  j["features"] = ev.features;
  j["dropped_features"] = ojson::array();
  if (ev.correlation) {
    for (const auto& d : ev.correlation->dropped) {
      j["dropped_features"].push_back({{"feature", d.feature}, {"kept_partner", d.kept_partner}, {"r", d.r}});
    }
  }
  ojson trimmed = ojson::array();
  for (const auto& r : ev.trimmed) trimmed.push_back(r.index);
  j["split"] = {{"train", ev.split.train}, {"test", ev.split.test}, {"trimmed", trimmed}};
  j["metrics"] = metrics_json(ev.metrics);
  j["baseline"] = metrics_json(ev.baseline_metrics);
  j["baseline"]["model"] = "linear";
  j["comparison"] = {{"test", "paired t on squared errors"},
                     {"t_stat", ev.comparison.t_stat},
                     {"p_value", ev.comparison.p_value}};
  if (in.alignment) {
    j["alignment"] = {{"shift", in.alignment->shift},
                      {"max_similarity", in.alignment->max_similarity},
                      {"max_shift", in.alignment->max_shift}};
  } else {
    j["alignment"] = nullptr;
  }
  if (in.tuning) {
    const auto& t = *in.tuning;
    j["tuning"] = {{"configurations", t.cv_table.size()},
                   {"best", hyper_json(t.best)},
                   {"best_mean_rmse", t.cv_table[t.best_index].mean_rmse}};
  } else {
    j["tuning"] = nullptr;
  }
  j["shap_ranking"] = ojson::array();
  for (const auto& imp : in.shap_ranking) {
    j["shap_ranking"].push_back({{"feature", imp.feature}, {"mean_abs_phi", imp.mean_abs}});
  }
  j["predictions"] = ojson::array();
  for (std::size_t i = 0; i < ev.split.test.size(); ++i) {
    const auto id = ev.split.test[i];
    ojson row{{"row_id", id}};
    if (id < in.rows.size()) row["timestamp"] = format_iso8601(in.rows[id].timestamp);
    row["observed"] = ev.truth[i];
    row["predicted"] = ev.predicted[i];
    row["baseline"] = ev.baseline_predicted[i];
    j["predictions"].push_back(std::move(row));
  }
  return j.dump(1) + "\n";
}

std::string metrics_csv(std::string_view report) {
  const auto j = parse_report(report);
  std::string out = "model,rmse,mae,r2,n,t_stat,p_value\n";
  const auto& m = j.at("metrics");
  const auto& c = j.at("comparison");
  out += fmt::format("{},{},{},{},{},{},{}\n", j.at("model").get<std::string>(), cell(m.at("rmse")),
                     cell(m.at("mae")), cell(m.at("r2")), m.at("n").get<std::size_t>(), cell(c.at("t_stat")),
                     cell(c.at("p_value")));
  const auto& b = j.at("baseline");
  out += fmt::format("linear,{},{},{},{},,\n", cell(b.at("rmse")), cell(b.at("mae")), cell(b.at("r2")),
                     b.at("n").get<std::size_t>());
  return out;
}

std::string prediction_svg(std::string_view report) {
  const auto j = parse_report(report);
  const auto& preds = j.at("predictions");
  constexpr double kW = 900, kH = 360, kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;
  const std::size_t n = preds.size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : preds) {
    for (const char* k : {"observed", "predicted", "baseline"}) {
      lo = std::min(lo, p.at(k).get<double>());
      hi = std::max(hi, p.at(k).get<double>());
    }
  }
  if (n == 0) lo = 0, hi = 1;
  if (hi <= lo) hi = lo + 1;
  auto px = [&](std::size_t i) {
    return kLeft + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5) * (kW - kLeft - kRight);
  };
  auto py = [&](double v) { return kTop + (hi - v) / (hi - lo) * (kH - kTop - kBottom); };
  auto polyline = [&](const char* key, const char* colour, const char* extra) {
    std::string pts;
    for (std::size_t i = 0; i < n; ++i) {
      pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", px(i), py(preds[i].at(key).get<double>()));
    }
    return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", colour,
                       extra, pts);
  };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{2}\" y=\"18\" font-family=\"sans-serif\" font-size=\"14\">Predicted vs observed BC (ng/m3), "
      "test rows</text>\n",
      kW, kH, kLeft);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kLeft, kTop,
                     kH - kBottom);
  svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kH - kBottom,
                     kW - kRight);
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.0f}</text>\n",
        kLeft - 4, py(v) + 3, v);
  }
  if (n > 0) {
    const auto first = preds.front().value("timestamp", std::string());
    const auto last = preds.back().value("timestamp", std::string());
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n", kLeft,
                       kH - kBottom + 14, first);
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}</text>\n",
        kW - kRight, kH - kBottom + 14, last);
  }
  svg += polyline("baseline", "#999999", " stroke-dasharray=\"4 3\"");
  svg += polyline("observed", "#222222", "");
  svg += polyline("predicted", "#1f77b4", "");
  const double ly = kH - 10;
  svg += fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">"
      "<tspan fill=\"#222222\">observed</tspan>  <tspan fill=\"#1f77b4\">{}</tspan>  "
      "<tspan fill=\"#999999\">linear baseline</tspan></text>\n",
      kLeft, ly, j.at("model").get<std::string>());
  svg += "</svg>\n";
  return svg;
}

std::string shap_json(std::span<const explain::ShapReport> reports,
                      std::span<const explain::Importance> ranking, const Provenance& p) {
  ojson j;
  j["provenance"] = {{"config_hash", p.config_hash}, {"seed", p.seed}};
  j["format"] = "bctrace.shap";
  j["ranking"] = ojson::array();
  for (const auto& imp : ranking) j["ranking"].push_back({{"feature", imp.feature}, {"mean_abs_phi", imp.mean_abs}});
  j["rows"] = ojson::array();
  for (const auto& r : reports) {
    ojson phi = ojson::object();
    for (std::size_t i = 0; i < r.phi.size(); ++i) phi[r.feature_names[i]] = r.phi[i];
    j["rows"].push_back(
        {{"row_id", r.row_id}, {"base_value", r.base_value}, {"prediction", r.prediction}, {"phi", phi}});
  }
  return j.dump(1) + "\n";
}

}  // namespace bctrace::pipeline
