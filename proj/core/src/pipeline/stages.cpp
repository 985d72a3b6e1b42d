#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "bctrace/pipeline.hpp"

namespace bctrace::pipeline {
namespace {

model::Dataset select_columns(const model::Dataset& d, std::span<const std::string> names) {
  std::vector<std::size_t> cols;
  for (const auto& n : names) {
    const auto it = std::find(d.feature_names.begin(), d.feature_names.end(), n);
    if (it == d.feature_names.end()) throw Error(ErrorCode::kSchemaMismatch, fmt::format("no column '{}'", n));
    cols.push_back(static_cast<std::size_t>(it - d.feature_names.begin()));
  }
  model::Dataset out;
  out.feature_names.assign(names.begin(), names.end());
  std::vector<double> row(cols.size());
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) row[c] = d.at(r, cols[c]);
    out.push_row(row, d.y[r]);
  }
  return out;
}

// Column means over present values; 0 for an all-missing column.
std::vector<double> column_means(const model::Dataset& d) {
  std::vector<double> mean(d.cols(), 0.0);
  for (std::size_t c = 0; c < d.cols(); ++c) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const double v = d.at(r, c);
      if (!is_missing(v)) {
        s += v;
        ++n;
      }
    }
    if (n > 0) mean[c] = s / static_cast<double>(n);
  }
  return mean;
}

model::Dataset impute(model::Dataset d, std::span<const double> means) {
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) {
      double& v = d.x[r * d.cols() + c];
      if (is_missing(v)) v = means[c];
    }
  }
  return d;
}

}  // namespace

Session ingest_files(const InputPaths& in, const std::string& label) {
  auto samples = in_stage("ingest", [&] { return parse_ae51_csv(read_text(in.ae51)); });
  auto events = in_stage("ingest", [&] { return parse_event_log(read_text(in.events)); });
  auto weather = in_stage("ingest", [&] { return parse_weather(read_text(in.weather)); });
  std::vector<TrafficDensitySample> traffic;
  if (!in.traffic.empty()) traffic = in_stage("ingest", [&] { return parse_traffic(read_text(in.traffic)); });
  return in_stage("ingest", [&] {
    return make_session(std::move(samples), std::move(events), std::move(weather), std::move(traffic), label);
  });
}

PreprocessOutput preprocess(Session s, const signal::OnaConfig& ona, const signal::TrimConfig& trim) {
  return in_stage("preprocess", [&] {
    auto result = signal::ona_filter(s.bc_raw, ona);
    PreprocessOutput out;
    out.audit = signal::trim_outliers(result.series, trim);
    s.bc_post = std::move(result.series);
    s.ona_window_sizes = std::move(result.window_sizes);
    s.ona_delta = ona.delta_atn;
    s.alignment.reset();
    out.session = std::move(s);
    return out;
  });
}

AlignOutput align_session(Session s, const align::GridSeries& activity, std::int64_t max_shift,
                          std::int64_t resample_step) {
  return in_stage("align", [&] {
    const BcSeries& bc = s.bc_post ? *s.bc_post : s.bc_raw;
    AlignOutput out;
    out.result = align::find_optimal_shift(align::to_grid_series(bc), activity,
                                           align::ShiftSearchConfig::symmetric(max_shift, resample_step));
    const auto shift = out.result.optimal_shift;
    if (s.bc_post) s.bc_post = align::apply_shift(*s.bc_post, shift);
    s.bc_raw = align::apply_shift(s.bc_raw, shift);
    s.alignment = SessionAlignment{shift, out.result.max_similarity, max_shift};
    out.session = std::move(s);
    return out;
  });
}

std::vector<vision::Frame> load_detections(const std::filesystem::path& p) {
  return in_stage("vision", [&] { return vision::parse_detections_json(read_text(p)); });
}

vision::GrayImage load_background(const std::filesystem::path& p) {
  return in_stage("vision", [&] {
    std::filesystem::path file = p;
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> pgms;
      for (const auto& e : std::filesystem::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".pgm") pgms.push_back(e.path());
      }
      if (pgms.empty()) throw Error(ErrorCode::kMissingFile, fmt::format("no .pgm frames in '{}'", p.string()));
      std::sort(pgms.begin(), pgms.end());
      file = pgms.front();
    }
    return vision::parse_pgm(read_text(file));
  });
}

VisionOutput run_vision(std::span<const vision::Frame> frames, const vision::LaneGeometry& lanes,
                        const VisionSettings& settings, const vision::CountOptions& counts) {
  return in_stage("vision", [&] {
    VisionOutput out;
    out.lanes = lanes;
    vision::TrackerState state;
    for (const auto& f : frames) vision::update_tracks(f.detections, state, f.timestamp, settings.tracker, &lanes);
    for (auto& t : vision::finish_tracks(state)) {
      out.tracks.push_back(vision::classify_stop(std::move(t), settings.speed_eps, settings.min_stop));
    }
    out.events = vision::events_from_tracks(out.tracks);
    out.counts = vision::bin_counts(out.tracks, counts);
    return out;
  });
}

features::FeatureTable build_features(const vision::CountReport& counts, const Session& s,
                                      const features::JoinConfig& join) {
  return in_stage("features", [&] {
    const BcSeries& post = s.bc_post ? *s.bc_post : s.bc_raw;
    return features::build_feature_table(counts, s.weather, s.traffic, post, &s.bc_raw, s.label, join);
  });
}

std::string table_to_json(std::span<const FeatureRow> rows, const Provenance& p) {
  nlohmann::ordered_json j;
  j["provenance"] = {{"config_hash", p.config_hash}, {"seed", p.seed}};
  j["rows"] = nlohmann::ordered_json::parse(serialize_feature_rows(rows));
  return j.dump(1) + "\n";
}

std::vector<FeatureRow> table_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return parse_feature_rows(text);  // newline-delimited rows
  }
  if (j.is_object() && j.contains("rows")) return parse_feature_rows(j.at("rows").dump());
  return parse_feature_rows(text);
}

Evaluation evaluate_table(std::span<const FeatureRow> rows, const EvaluationSettings& settings,
                          const FitFn& fit) {
  Evaluation ev;
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "split: feature table is empty");
  const std::size_t lanes = rows.front().lane_count();
  ev.candidate_features =
      settings.features.empty()
          ? features::default_feature_names(lanes, settings.include_traffic && features::any_traffic(rows))
          : settings.features;
  const auto full = in_stage("split", [&] { return features::to_dataset(rows, ev.candidate_features, settings.target); });

  const eval::Split raw_split = in_stage("split", [&] {
    if (settings.split.kind == eval::SplitKind::kWindowed) {
      std::vector<UnixSeconds> ts;
      std::vector<std::string> ds;
      for (const auto& r : rows) {
        ts.push_back(r.timestamp);
        ds.push_back(r.dataset);
      }
      return eval::windowed_split(ts, ds, settings.split);
    }
    if (settings.split.kind != eval::SplitKind::kStratified) {
      throw Error(ErrorCode::kBadConfig, "evaluation needs a stratified or windowed split");
    }
    return eval::stratified_split(full.y, settings.split);
  });

  std::vector<std::string> datasets;
  for (const auto& r : rows) datasets.push_back(r.dataset);
  auto trimmed = in_stage("split", [&] { return eval::trim_train_side(full.y, datasets, raw_split, settings.trim); });
  ev.split = std::move(trimmed.split);
  ev.trimmed = std::move(trimmed.removed);

  auto train = full.subset(ev.split.train);
  auto test = full.subset(ev.split.test);
  ev.features = ev.candidate_features;
  if (settings.corr_threshold) {
    auto filtered = in_stage("features", [&] { return features::filter_correlated(train, *settings.corr_threshold); });
    ev.features = filtered.table.feature_names;
    ev.correlation = std::move(filtered.report);
    train = std::move(filtered.table);
    test = select_columns(test, ev.features);
  }

  ev.model = in_stage("train", [&] { return fit(train); });
  ev.predicted = in_stage("evaluate", [&] { return model::predict(ev.model, test); });
  ev.truth = test.y;

  const auto means = column_means(train);
  ev.baseline = in_stage("train", [&] { return model::fit_linear(impute(train, means)); });
  ev.baseline_predicted = model::predict(model::Model(ev.baseline), impute(test, means));

  in_stage("evaluate", [&] {
    ev.metrics = eval::metrics(ev.predicted, ev.truth);
    ev.baseline_metrics = eval::metrics(ev.baseline_predicted, ev.truth);
    std::vector<double> ea, eb;
    for (std::size_t i = 0; i < ev.truth.size(); ++i) {
      ea.push_back(ev.predicted[i] - ev.truth[i]);
      eb.push_back(ev.baseline_predicted[i] - ev.truth[i]);
    }
    ev.comparison = eval::compare_models(ea, eb);
    ev.metrics.t_stat = ev.comparison.t_stat;
    ev.metrics.p_value = ev.comparison.p_value;
    ev.metrics.comparator = "linear";
    return 0;
  });
  ev.train = std::move(train);
  ev.test = std::move(test);
  return ev;
}

}  // namespace bctrace::pipeline
