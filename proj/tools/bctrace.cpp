#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bctrace;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
  unsigned threads = 1;
};

// Explicit flag, then BCTRACE_SEED, then the default.
std::uint64_t resolve_seed(const CLI::Option* flag, std::uint64_t value) {
  if (flag != nullptr && flag->count() > 0) return value;
  if (const char* env = std::getenv("BCTRACE_SEED")) {
    try {
      std::size_t used = 0;
      const auto s = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing");
      return s;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kBadConfig, fmt::format("BCTRACE_SEED '{}' is not an unsigned integer", env));
    }
  }
  return value;
}

pipeline::Provenance settings_provenance(const ojson& settings, std::uint64_t seed) {
  return pipeline::provenance_for(settings.dump(), seed);
}

signal::TrimMode parse_trim_mode(const std::string& s) {
  if (s == "local") return signal::TrimMode::kLocal;
  if (s == "global") return signal::TrimMode::kGlobal;
  throw Error(ErrorCode::kBadConfig, fmt::format("unknown trim mode '{}'", s));
}

TargetKind parse_target(const std::string& s) {
  if (s == "post") return TargetKind::kPost;
  if (s == "raw") return TargetKind::kRaw;
  throw Error(ErrorCode::kBadConfig, fmt::format("unknown target '{}'", s));
}

std::vector<std::string> table_features(std::span<const FeatureRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "feature table is empty");
  return features::default_feature_names(rows.front().lane_count(), features::any_traffic(rows));
}

model::Dataset load_dataset(const std::string& path, TargetKind target,
                            const std::vector<std::string>* names = nullptr) {
  const auto rows = pipeline::in_stage("features", [&] { return pipeline::table_from_json(pipeline::read_text(path)); });
  const auto cols = names ? *names : table_features(rows);
  return pipeline::in_stage("features", [&] { return features::to_dataset(rows, cols, target); });
}

void add_ingest(CLI::App& app) {
  auto* cmd = app.add_subcommand("ingest", "Parse AE51, event log and weather/traffic feeds into a session");
  struct Args {
    pipeline::InputPaths in;
    std::string out, label = "session";
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--ae51", a->in.ae51, "AE51 CSV export")->required();
  cmd->add_option("--events", a->in.events, "Detection event log")->required();
  cmd->add_option("--weather", a->in.weather, "Weather feed (CSV or JSON)")->required();
  cmd->add_option("--traffic", a->in.traffic, "Traffic density feed (CSV or JSON)");
  cmd->add_option("--label", a->label, "Dataset label");
  cmd->add_option("--out", a->out, "Session JSON")->required();
  cmd->callback([a] {
    const auto s = pipeline::ingest_files(a->in, a->label);
    const ojson settings{{"command", "ingest"}, {"ae51", a->in.ae51},     {"events", a->in.events},
                         {"weather", a->in.weather}, {"traffic", a->in.traffic}, {"label", a->label}};
    pipeline::write_file(a->out, pipeline::stamp_json(session_to_json(s), settings_provenance(settings, 0)));
  });
}

void add_preprocess(CLI::App& app) {
  auto* cmd = app.add_subcommand("preprocess", "ONA filtering with an outlier audit");
  struct Args {
    std::string in, out, removed, trim = "local";
    double delta = 0.05, level = 0.95;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--in", a->in, "Session JSON")->required();
  cmd->add_option("--ona-delta", a->delta, "ATN increment closing an ONA window");
  cmd->add_option("--trim", a->trim, "Outlier statistics: local or global");
  cmd->add_option("--level", a->level, "Two-sided confidence level for the audit");
  cmd->add_option("--removed", a->removed, "Audit CSV of rows outside the bounds");
  cmd->add_option("--out", a->out, "Preprocessed session JSON")->required();
  cmd->callback([a] {
    auto s = pipeline::in_stage("preprocess", [&] { return session_from_json(pipeline::read_text(a->in)); });
    const auto out = pipeline::preprocess(std::move(s), signal::OnaConfig{a->delta},
                                          signal::TrimConfig{parse_trim_mode(a->trim), a->level});
    const ojson settings{{"command", "preprocess"}, {"in", a->in}, {"ona_delta", a->delta},
                         {"trim", a->trim},         {"level", a->level}};
    const auto prov = settings_provenance(settings, 0);
    pipeline::write_file(a->out, pipeline::stamp_json(session_to_json(out.session), prov));
    if (!a->removed.empty()) pipeline::write_file(a->removed, pipeline::stamp_csv(signal::removed_rows_csv(out.audit), prov));
  });
}

void add_align(CLI::App& app) {
  auto* cmd = app.add_subcommand("align", "Estimate and remove the BC lag against vehicle activity");
  struct Args {
    std::string in, out, curve, counts;
    std::int64_t max_shift = 600, step = 1;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--in", a->in, "Session JSON")->required();
  cmd->add_option("--max-shift", a->max_shift, "Largest shift searched, seconds");
  cmd->add_option("--step", a->step, "Resampling step, seconds");
  cmd->add_option("--counts", a->counts, "Counts JSON for the activity series (default: session events)");
  cmd->add_option("--curve", a->curve, "Similarity curve CSV");
  cmd->add_option("--out", a->out, "Aligned session JSON")->required();
  cmd->callback([a] {
    auto s = pipeline::in_stage("align", [&] { return session_from_json(pipeline::read_text(a->in)); });
    const auto activity = pipeline::in_stage("align", [&] {
      return a->counts.empty() ? activity_from_events(s.events)
                               : activity_from_counts(vision::parse_counts(pipeline::read_text(a->counts)));
    });
    const auto out = pipeline::align_session(std::move(s), activity, a->max_shift, a->step);
    const ojson settings{{"command", "align"}, {"in", a->in}, {"counts", a->counts},
                         {"max_shift", a->max_shift}, {"step", a->step}};
    const auto prov = settings_provenance(settings, 0);
    pipeline::write_file(a->out, pipeline::stamp_json(session_to_json(out.session), prov));
    if (!a->curve.empty()) pipeline::write_file(a->curve, pipeline::stamp_csv(align::similarity_curve_csv(out.result), prov));
    std::cout << fmt::format("shift {} s, similarity {:.6f}\n", out.result.optimal_shift, out.result.max_similarity);
  });
}

void add_vision(CLI::App& app) {
  auto* cmd = app.add_subcommand("vision", "Lanes, tracks, stops and per-bin counts from detections");
  struct Args {
    std::string frames, detections, lanes = "auto", out, events_out, lanes_out;
    std::size_t lane_count = 2;
    pipeline::VisionSettings vs;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--frames", a->frames, "PGM frame or directory (for --lanes auto)");
  cmd->add_option("--detections", a->detections, "Detections JSON, or an event log")->required();
  cmd->add_option("--lanes", a->lanes, "auto or a lane geometry JSON");
  cmd->add_option("--lane-count", a->lane_count, "Lanes counted");
  cmd->add_option("--speed-eps", a->vs.speed_eps, "Stop speed threshold, px/s");
  cmd->add_option("--min-stop", a->vs.min_stop, "Shortest stop, seconds");
  cmd->add_option("--max-distance", a->vs.tracker.max_distance, "Association gate, px");
  cmd->add_option("--vote-threshold", a->vs.lanes.vote_threshold, "Hough vote threshold");
  cmd->add_option("--events-out", a->events_out, "First-seen event log");
  cmd->add_option("--lanes-out", a->lanes_out, "Lane geometry JSON");
  cmd->add_option("--out", a->out, "Counts JSON")->required();
  cmd->callback([a] {
    const ojson settings{{"command", "vision"},         {"frames", a->frames},
                         {"detections", a->detections}, {"lanes", a->lanes},
                         {"lane_count", a->lane_count}, {"speed_eps", a->vs.speed_eps},
                         {"min_stop", a->vs.min_stop},  {"max_distance", a->vs.tracker.max_distance},
                         {"vote_threshold", a->vs.lanes.vote_threshold}};
    const auto prov = settings_provenance(settings, 0);
    const vision::CountOptions opts{a->lane_count, 30, std::nullopt, std::nullopt};
    if (fs::path(a->detections).extension() != ".json") {
      const auto events = pipeline::in_stage("vision", [&] { return parse_event_log(pipeline::read_text(a->detections)); });
      const auto counts = pipeline::in_stage("vision", [&] { return vision::bin_counts(events, opts); });
      pipeline::write_file(a->out, pipeline::stamp_json(vision::serialize_counts(counts), prov));
      return;
    }
    const auto frames = pipeline::load_detections(a->detections);
    const auto geom = pipeline::in_stage("vision", [&] {
      if (a->lanes != "auto") return vision::parse_lane_geometry(pipeline::read_text(a->lanes));
      if (a->frames.empty()) throw Error(ErrorCode::kBadConfig, "--lanes auto needs --frames");
      return vision::detect_lanes(pipeline::load_background(a->frames), a->vs.lanes);
    });
    const auto out = pipeline::run_vision(frames, geom, a->vs, opts);
    pipeline::write_file(a->out, pipeline::stamp_json(vision::serialize_counts(out.counts), prov));
    if (!a->events_out.empty()) pipeline::write_file(a->events_out, serialize_event_log(out.events));
    if (!a->lanes_out.empty()) {
      pipeline::write_file(a->lanes_out, pipeline::stamp_json(vision::serialize_lane_geometry(geom), prov));
    }
  });
}

void add_features(CLI::App& app) {
  auto* cmd = app.add_subcommand("features", "Join counts, weather, traffic and BC into a feature table");
  struct Args {
    std::string counts, session, out, corr, csv, target = "post";
    double threshold = 0.70;
    features::JoinConfig join;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--counts", a->counts, "Counts JSON")->required();
  cmd->add_option("--session", a->session, "Aligned session JSON")->required();
  cmd->add_option("--target", a->target, "post or raw");
  cmd->add_option("--weather-lag", a->join.weather_lag, "Seconds before each bin for weather");
  cmd->add_option("--corr", a->corr, "Correlation report CSV");
  cmd->add_option("--threshold", a->threshold, "|r| above which the report marks a feature for dropping");
  cmd->add_option("--csv", a->csv, "Table as CSV");
  cmd->add_option("--out", a->out, "Feature table JSON")->required();
  cmd->callback([a] {
    a->join.target = parse_target(a->target);
    const auto counts = pipeline::in_stage("features", [&] { return vision::parse_counts(pipeline::read_text(a->counts)); });
    const auto s = pipeline::in_stage("features", [&] { return session_from_json(pipeline::read_text(a->session)); });
    const auto table = pipeline::build_features(counts, s, a->join);
    const ojson settings{{"command", "features"}, {"counts", a->counts}, {"session", a->session},
                         {"target", a->target},   {"weather_lag", a->join.weather_lag},
                         {"threshold", a->threshold}};
    const auto prov = settings_provenance(settings, 0);
    pipeline::write_file(a->out, pipeline::table_to_json(table.rows, prov));
    if (!a->csv.empty()) pipeline::write_file(a->csv, pipeline::stamp_csv(serialize_feature_rows_csv(table.rows), prov));
    if (!a->corr.empty()) {
      const auto data = pipeline::in_stage("features", [&] {
        return features::to_dataset(table.rows, table_features(table.rows), a->join.target);
      });
      const auto filtered = pipeline::in_stage("features", [&] { return features::filter_correlated(data, a->threshold); });
      pipeline::write_file(a->corr, pipeline::stamp_csv(features::correlation_csv(filtered.report), prov));
    }
  });
}

void add_train(CLI::App& app, const Globals&) {
  auto* cmd = app.add_subcommand("train", "Fit a model on a feature table");
  struct Args {
    std::string table, out, kind = "gbt", target = "post";
    model::GbtHyperParams p;
    int forest_depth = 0;
    std::uint64_t seed = 7;
    CLI::Option* seed_opt = nullptr;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--table", a->table, "Feature table JSON")->required();
  cmd->add_option("--model", a->kind, "gbt, gb, forest or linear");
  cmd->add_option("--lr", a->p.learning_rate, "Learning rate");
  cmd->add_option("--depth", a->p.max_depth, "Maximum tree depth (forest: 0 = unlimited)");
  cmd->add_option("--trees", a->p.n_estimators, "Number of trees");
  cmd->add_option("--lambda", a->p.lambda, "L2 penalty on leaf weights");
  cmd->add_option("--target", a->target, "post or raw");
  a->seed_opt = cmd->add_option("--seed", a->seed, "Random seed");
  cmd->add_option("--out", a->out, "Model JSON")->required();
  cmd->callback([a] {
    const auto seed = resolve_seed(a->seed_opt, a->seed);
    const auto kind = model::parse_model_kind(a->kind);
    if (!kind) throw Error(ErrorCode::kBadConfig, fmt::format("unknown model kind '{}'", a->kind));
    const auto data = load_dataset(a->table, parse_target(a->target));
    const auto m = pipeline::in_stage("train", [&]() -> model::Model {
      if (*kind == model::ModelKind::kXgb) return model::fit_gbt(data, a->p, seed);
      const model::HyperConfig hc{a->p.n_estimators, a->p.learning_rate,
                                  *kind == model::ModelKind::kForest && a->p.max_depth <= 0
                                      ? std::nullopt
                                      : std::optional<int>(a->p.max_depth),
                                  a->p.min_samples_split};
      return model::fit_config(data, *kind, hc, a->p.lambda, seed);
    });
    const ojson settings{{"command", "train"}, {"table", a->table},  {"model", a->kind},
                         {"lr", a->p.learning_rate}, {"depth", a->p.max_depth}, {"trees", a->p.n_estimators},
                         {"lambda", a->p.lambda}, {"target", a->target}};
    pipeline::write_file(a->out, pipeline::stamp_json(model::model_to_json(m), settings_provenance(settings, seed)));
  });
}

void add_tune(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("tune", "Grid search with k-fold cross-validation");
  struct Args {
    std::string grid, table, out, cv, target = "post";
    std::size_t k = 5;
    std::uint64_t seed = 7;
    CLI::Option* seed_opt = nullptr;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--grid", a->grid, "Grid JSON")->required();
  cmd->add_option("--table", a->table, "Feature table JSON")->required();
  cmd->add_option("--k", a->k, "Folds");
  cmd->add_option("--target", a->target, "post or raw");
  a->seed_opt = cmd->add_option("--seed", a->seed, "Random seed");
  cmd->add_option("--cv", a->cv, "Per-configuration CV table CSV");
  cmd->add_option("--out", a->out, "Refit model JSON")->required();
  cmd->callback([a, &g] {
    const auto seed = resolve_seed(a->seed_opt, a->seed);
    const auto spec = pipeline::in_stage("tune", [&] { return model::parse_grid_json(pipeline::read_text(a->grid)); });
    const auto data = load_dataset(a->table, parse_target(a->target));
    const auto result = pipeline::in_stage("tune", [&] { return model::grid_search(data, spec, a->k, seed, g.threads); });
    const ojson settings{{"command", "tune"}, {"grid", a->grid}, {"table", a->table}, {"k", a->k}, {"target", a->target}};
    const auto prov = settings_provenance(settings, seed);
    pipeline::write_file(a->out, pipeline::stamp_json(model::model_to_json(result.refit), prov));
    if (!a->cv.empty()) pipeline::write_file(a->cv, pipeline::stamp_csv(model::cv_table_csv(result), prov));
    const auto& best = result.best;
    std::cout << fmt::format("best of {}: n_estimators={} learning_rate={} max_depth={} mean_rmse={:.4f}\n",
                             result.cv_table.size(), best.n_estimators, best.learning_rate,
                             best.max_depth ? std::to_string(*best.max_depth) : "none",
                             result.cv_table[result.best_index].mean_rmse);
  });
}

void add_evaluate(CLI::App& app) {
  auto* cmd = app.add_subcommand("evaluate", "Refit a model's settings on a train split and score the test side");
  struct Args {
    std::string table, model_path, report, split = "stratified", trim = "local", target = "post";
    eval::SplitSpec spec;
    std::uint64_t seed = 7;
    CLI::Option* seed_opt = nullptr;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--table", a->table, "Feature table JSON")->required();
  cmd->add_option("--split", a->split, "stratified or windowed");
  cmd->add_option("--train-fraction", a->spec.train_fraction, "Share of rows for training");
  cmd->add_option("--window", a->spec.window_length, "Window length for the windowed split, seconds");
  cmd->add_option("--trim", a->trim, "Train-side outlier trimming: local or global");
  cmd->add_option("--target", a->target, "post or raw");
  cmd->add_option("--model", a->model_path, "Model JSON whose kind and settings are refit")->required();
  a->seed_opt = cmd->add_option("--seed", a->seed, "Random seed");
  cmd->add_option("--report", a->report, "Report JSON")->required();
  cmd->callback([a] {
    const auto seed = resolve_seed(a->seed_opt, a->seed);
    const auto kind = eval::parse_split_kind(a->split);
    if (!kind || *kind == eval::SplitKind::kKfold) {
      throw Error(ErrorCode::kBadConfig, fmt::format("split must be stratified or windowed, got '{}'", a->split));
    }
    a->spec.kind = *kind;
    a->spec.seed = seed;
    const auto proto = pipeline::in_stage("evaluate", [&] { return model::model_from_json(pipeline::read_text(a->model_path)); });
    const auto rows = pipeline::in_stage("evaluate", [&] { return pipeline::table_from_json(pipeline::read_text(a->table)); });
    pipeline::EvaluationSettings es;
    es.split = a->spec;
    es.trim = signal::TrimConfig{parse_trim_mode(a->trim), 0.95};
    es.corr_threshold = std::nullopt;
    es.target = parse_target(a->target);
    es.features = model::feature_names(proto);
    const pipeline::FitFn fit = [&](const model::Dataset& train) -> model::Model {
      return std::visit(
          [&](const auto& m) -> model::Model {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, model::GbtModel>) return model::fit_gbt(train, m.params, seed);
            else if constexpr (std::is_same_v<T, model::ForestModel>) return model::fit_forest(train, m.params, seed);
            else return model::fit_linear(train);
          },
          proto);
    };
    const auto ev = pipeline::evaluate_table(rows, es, fit);
    pipeline::ReportInputs ri;
    ri.evaluation = &ev;
    ri.rows = rows;
    ri.model_kind = std::string(model::kind_name(ev.model));
    const ojson settings{{"command", "evaluate"}, {"table", a->table}, {"model", a->model_path},
                         {"split", a->split},     {"train_fraction", a->spec.train_fraction},
                         {"window", a->spec.window_length}, {"trim", a->trim}, {"target", a->target}};
    const auto report = pipeline::report_json(ri, settings_provenance(settings, seed));
    pipeline::write_file(a->report, report);
    std::cout << pipeline::metrics_csv(report);
  });
}

void add_explain(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("explain", "Exact Shapley values for table rows");
  struct Args {
    std::string model_path, table, rows = "all", out, csv, target = "post";
    std::size_t background = 100;
    std::uint64_t seed = 7;
    CLI::Option* seed_opt = nullptr;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--model", a->model_path, "Model JSON")->required();
  cmd->add_option("--table", a->table, "Feature table JSON")->required();
  cmd->add_option("--rows", a->rows, "all, or comma-separated row ids");
  cmd->add_option("--background", a->background, "Background rows sampled from the table");
  cmd->add_option("--target", a->target, "post or raw");
  a->seed_opt = cmd->add_option("--seed", a->seed, "Random seed for the background sample");
  cmd->add_option("--csv", a->csv, "Long-format CSV (row_id, feature, value, phi)");
  cmd->add_option("--out", a->out, "SHAP JSON")->required();
  cmd->callback([a, &g] {
    const auto seed = resolve_seed(a->seed_opt, a->seed);
    const auto m = pipeline::in_stage("explain", [&] { return model::model_from_json(pipeline::read_text(a->model_path)); });
    const auto names = model::feature_names(m);
    const auto data = load_dataset(a->table, parse_target(a->target), &names);
    std::vector<std::size_t> ids;
    if (a->rows == "all") {
      for (std::size_t i = 0; i < data.rows(); ++i) ids.push_back(i);
    } else {
      std::stringstream ss(a->rows);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        std::size_t id = 0;
        try {
          id = std::stoul(tok, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != tok.size() || id >= data.rows()) {
          throw Error(ErrorCode::kBadParams, fmt::format("explain: bad row id '{}'", tok));
        }
        ids.push_back(id);
      }
    }
    const auto selected = data.subset(ids);
    auto reports = pipeline::in_stage("explain", [&] {
      const auto bg = explain::select_background(data, a->background, seed);
      return explain::shapley_rows(m, selected, bg, explain::ShapMethod::kAuto, g.threads);
    });
    const auto csv = explain::shap_csv(reports, selected);
    for (auto& r : reports) r.row_id = ids[r.row_id];
    const auto ranking = explain::global_importance(reports);
    const ojson settings{{"command", "explain"}, {"model", a->model_path}, {"table", a->table},
                         {"rows", a->rows},      {"background", a->background}, {"target", a->target}};
    const auto prov = settings_provenance(settings, seed);
    pipeline::write_file(a->out, pipeline::shap_json(reports, ranking, prov));
    if (!a->csv.empty()) pipeline::write_file(a->csv, pipeline::stamp_csv(csv, prov));
    for (const auto& imp : ranking) std::cout << fmt::format("{:>14} {:.4f}\n", imp.feature, imp.mean_abs);
  });
}

void add_simulate(CLI::App& app) {
  auto* cmd = app.add_subcommand("simulate", "Generate a synthetic session with ground truth");
  struct Args {
    std::string config, out_dir;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--config", a->config, "Scenario JSON (omit for the defaults)");
  cmd->add_option("--out-dir", a->out_dir, "Output directory")->required();
  cmd->callback([a] {
    const auto cfg = pipeline::in_stage("simulate", [&] {
      return a->config.empty() ? synth::ScenarioConfig{} : synth::parse_scenario_json(pipeline::read_text(a->config));
    });
    const auto s = pipeline::in_stage("simulate", [&] { return synth::generate_scenario(cfg); });
    pipeline::in_stage("simulate", [&] {
      pipeline::write_scenario(s, a->out_dir);
      return 0;
    });
  });
}

void add_report(CLI::App& app) {
  auto* cmd = app.add_subcommand("report", "Metrics table and predicted-vs-observed chart from a report");
  struct Args {
    std::string in, out_dir;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--in", a->in, "Report JSON from evaluate or run")->required();
  cmd->add_option("--out-dir", a->out_dir, "Output directory")->required();
  cmd->callback([a] {
    const auto text = pipeline::in_stage("report", [&] { return pipeline::read_text(a->in); });
    pipeline::in_stage("report", [&] {
      const auto j = nlohmann::json::parse(text, nullptr, false);
      pipeline::Provenance prov;
      if (!j.is_discarded() && j.contains("provenance")) {
        prov.config_hash = j["provenance"].value("config_hash", std::string());
        prov.seed = j["provenance"].value("seed", std::uint64_t{0});
      }
      const auto csv = pipeline::metrics_csv(text);
      pipeline::ArtifactWriter w(a->out_dir);
      w.write("metrics.csv", pipeline::stamp_csv(csv, prov));
      w.write("predicted_vs_observed.svg", pipeline::prediction_svg(text));
      w.commit();
      std::cout << csv;
      return 0;
    });
  });
}

void add_run(CLI::App& app, const Globals& g) {
  auto* cmd = app.add_subcommand("run", "Run the full chain from a pipeline config");
  struct Args {
    std::string config, out_dir;
    std::uint64_t seed = 7;
    CLI::Option* seed_opt = nullptr;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("--config", a->config, "Pipeline config JSON")->required();
  cmd->add_option("--out-dir", a->out_dir, "Overrides out_dir");
  a->seed_opt = cmd->add_option("--seed", a->seed, "Overrides the config seed");
  cmd->callback([a, &g] {
    auto cfg = pipeline::in_stage("config", [&] {
      return pipeline::parse_pipeline_config(pipeline::read_text(a->config), fs::path(a->config).parent_path());
    });
    if (!a->out_dir.empty()) cfg.out_dir = a->out_dir;
    cfg.seed = resolve_seed(a->seed_opt, cfg.seed);
    cfg.threads = g.threads;
    const auto dir = pipeline::run_pipeline(cfg);
    std::cout << pipeline::metrics_csv(pipeline::read_text(dir / "report.json"));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bctrace: street-level black carbon estimation from traffic and weather"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads for parallel stages")->check(CLI::Range(1u, 256u));
  add_ingest(app);
  add_preprocess(app);
  add_align(app);
  add_vision(app);
  add_features(app);
  add_train(app, g);
  add_tune(app, g);
  add_evaluate(app);
  add_explain(app, g);
  add_simulate(app);
  add_report(app);
  add_run(app, g);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << fmt::format("bctrace: error [{}]: {}{}\n", to_string(e.code()), e.message(),
                             e.line() ? fmt::format(" (line {})", *e.line()) : std::string());
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << fmt::format("bctrace: internal error: {}\n", e.what());
    return 4;
  }
  return 0;
}
