#include <fmt/format.h>

#include "bctrace/pipeline.hpp"

namespace bctrace::pipeline {

void write_scenario(const synth::Scenario& s, const std::filesystem::path& dir) {
  ArtifactWriter w(dir);
  w.write("ae51.csv", serialize_ae51_csv(s.ae51));
  w.write("events.log", serialize_event_log(s.events));
  w.write("detections.json", vision::serialize_detections_json(s.frames));
  w.write("weather.csv", serialize_weather_csv(s.weather));
  w.write("traffic.csv", serialize_traffic_csv(s.traffic));
  w.write("frames/background.pgm", vision::serialize_pgm(s.background));
  w.write("lanes_truth.json", vision::serialize_lane_geometry(s.lanes));
  w.write("scenario.json", synth::scenario_to_json(s.config));
  w.write("manifest.json", synth::manifest_json(s));
  w.commit();
}

std::filesystem::path run_pipeline(const PipelineConfig& cfg) {
  const Provenance prov{config_hash(cfg), cfg.seed};
  ArtifactWriter out(cfg.out_dir);
  const std::size_t lane_count = cfg.scenario ? cfg.scenario->lane_count : cfg.lane_count;
  const vision::CountOptions count_opts{lane_count, 30, std::nullopt, std::nullopt};

  Session session;
  vision::CountReport counts;
  std::optional<vision::LaneGeometry> lanes;
  if (cfg.scenario) {
    const auto sc = in_stage("simulate", [&] { return synth::generate_scenario(*cfg.scenario); });
    out.write("inputs/scenario.json", synth::scenario_to_json(sc.config));
    out.write("inputs/manifest.json", synth::manifest_json(sc));
    // The generated files go through the same parsers as recorded inputs.
    const auto ae51 = serialize_ae51_csv(sc.ae51);
    const auto events = serialize_event_log(sc.events);
    const auto weather = serialize_weather_csv(sc.weather);
    const auto traffic = serialize_traffic_csv(sc.traffic);
    out.write("inputs/ae51.csv", ae51);
    out.write("inputs/events.log", events);
    out.write("inputs/weather.csv", weather);
    out.write("inputs/traffic.csv", traffic);
    out.write("inputs/background.pgm", vision::serialize_pgm(sc.background));
    session = in_stage("ingest", [&] {
      return make_session(parse_ae51_csv(ae51), parse_event_log(events), parse_weather(weather),
                          parse_traffic(traffic), cfg.label);
    });
    lanes = in_stage("vision", [&] { return vision::detect_lanes(sc.background, cfg.vision.lanes); });
    counts = run_vision(sc.frames, *lanes, cfg.vision, count_opts).counts;
  } else {
    session = ingest_files(cfg.inputs, cfg.label);
    if (!cfg.inputs.detections.empty()) {
      const auto frames = load_detections(cfg.inputs.detections);
      lanes = cfg.inputs.lanes == "auto"
                  ? in_stage("vision", [&] {
                      if (cfg.inputs.frames.empty()) {
                        throw Error(ErrorCode::kBadConfig, "automatic lanes need inputs.frames");
                      }
                      return vision::detect_lanes(load_background(cfg.inputs.frames), cfg.vision.lanes);
                    })
                  : in_stage("vision", [&] { return vision::parse_lane_geometry(read_text(cfg.inputs.lanes)); });
      counts = run_vision(frames, *lanes, cfg.vision, count_opts).counts;
    } else {
      counts = in_stage("vision", [&] { return vision::bin_counts(session.events, count_opts); });
    }
  }
  if (lanes) out.write("lanes.json", stamp_json(vision::serialize_lane_geometry(*lanes), prov));
  out.write("counts.json", stamp_json(vision::serialize_counts(counts), prov));

  auto pre = preprocess(std::move(session), cfg.ona, cfg.trim);
  out.write("removed_rows.csv", stamp_csv(signal::removed_rows_csv(pre.audit), prov));
  const auto activity = in_stage("align", [&] { return activity_from_counts(counts); });
  auto aligned = align_session(std::move(pre.session), activity, cfg.max_shift, cfg.resample_step);
  session = std::move(aligned.session);
  out.write("curve.csv", stamp_csv(align::similarity_curve_csv(aligned.result), prov));
  out.write("session.json", stamp_json(session_to_json(session), prov));

  const auto table = build_features(counts, session, cfg.join);
  out.write("table.json", table_to_json(table.rows, prov));
  out.write("table.csv", stamp_csv(serialize_feature_rows_csv(table.rows), prov));

  std::optional<model::GridResult> tuning;
  const FitFn fit = [&](const model::Dataset& train) -> model::Model {
    if (cfg.grid) {
      tuning = model::grid_search(train, *cfg.grid, cfg.cv_k, cfg.seed, cfg.threads);
      return tuning->refit;
    }
    if (cfg.model == model::ModelKind::kXgb) return model::fit_gbt(train, cfg.gbt, cfg.seed);
    const model::HyperConfig hc{cfg.gbt.n_estimators, cfg.gbt.learning_rate, cfg.gbt.max_depth,
                                cfg.gbt.min_samples_split};
    return model::fit_config(train, cfg.model, hc, cfg.gbt.lambda, cfg.seed);
  };
  EvaluationSettings es;
  es.split = cfg.split;
  es.split.seed = cfg.seed;
  es.trim = cfg.trim;
  es.corr_threshold = cfg.corr_threshold;
  es.target = cfg.join.target;
  es.include_traffic = cfg.include_traffic;
  const auto ev = evaluate_table(table.rows, es, fit);
  if (ev.correlation) out.write("corr.csv", stamp_csv(features::correlation_csv(*ev.correlation), prov));
  if (tuning) out.write("cv.csv", stamp_csv(model::cv_table_csv(*tuning), prov));
  out.write("model.json", stamp_json(model::model_to_json(ev.model), prov));
  out.write("baseline.json", stamp_json(model::model_to_json(model::Model(ev.baseline)), prov));

  auto shap = in_stage("explain", [&] {
    const auto bg = explain::select_background(ev.train, cfg.explain_background, cfg.seed);
    return explain::shapley_rows(ev.model, ev.test, bg, explain::ShapMethod::kAuto, cfg.threads);
  });
  std::string shap_rows = "row_id,feature,value,phi\n";
  for (auto& r : shap) {
    const auto pos = r.row_id;
    r.row_id = ev.split.test[pos];
    for (std::size_t i = 0; i < r.phi.size(); ++i) {
      shap_rows += fmt::format("{},{},{},{}\n", r.row_id, r.feature_names[i], ev.test.at(pos, i), r.phi[i]);
    }
  }
  const auto ranking = explain::global_importance(shap);
  out.write("shap.json", shap_json(shap, ranking, prov));
  out.write("shap.csv", stamp_csv(shap_rows, prov));

  ReportInputs ri;
  ri.evaluation = &ev;
  ri.rows = table.rows;
  ri.alignment = session.alignment;
  ri.tuning = tuning ? &*tuning : nullptr;
  ri.shap_ranking = ranking;
  ri.model_kind = std::string(model::kind_name(ev.model));
  const auto report = in_stage("report", [&] { return report_json(ri, prov); });
  out.write("report.json", report);
  out.write("metrics.csv", stamp_csv(metrics_csv(report), prov));
  out.write("predicted_vs_observed.svg", prediction_svg(report));
  out.commit();
  return out.dir();
}

}  // namespace bctrace::pipeline
