#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bctrace/align.hpp"
#include "bctrace/bc_signal.hpp"
#include "bctrace/error.hpp"
#include "bctrace/eval.hpp"
#include "bctrace/explain.hpp"
#include "bctrace/features.hpp"
#include "bctrace/model.hpp"
#include "bctrace/session.hpp"
#include "bctrace/synth.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::pipeline {

struct InputPaths {
  std::string ae51;
  std::string events;
  std::string weather;
  std::string traffic;     // optional
  std::string detections;  // JSON boxes; optional
  std::string frames;      // PGM file or directory; needed for "auto" lanes
  std::string lanes = "auto";
};

struct VisionSettings {
  vision::LaneDetectionConfig lanes;
  vision::TrackerConfig tracker;
  double speed_eps = 5.0;  // px/s
  double min_stop = 4.0;   // s
};

struct PipelineConfig {
  InputPaths inputs;
  // Generated inputs replace `inputs` when set.
  std::optional<synth::ScenarioConfig> scenario;
  std::string out_dir = "bctrace_out";
  std::string label = "session";
  std::size_t lane_count = 2;
  signal::OnaConfig ona;
  signal::TrimConfig trim;
  std::int64_t max_shift = 600;
  std::int64_t resample_step = 1;
  VisionSettings vision;
  features::JoinConfig join;
  std::optional<double> corr_threshold = 0.70;  // nullopt keeps every feature
  bool include_traffic = true;
  eval::SplitSpec split;
  model::ModelKind model = model::ModelKind::kXgb;
  model::GbtHyperParams gbt{.n_estimators = 200, .learning_rate = 0.05, .max_depth = 3};
  std::optional<model::GridSpec> grid;  // tune on the train side when set
  std::size_t cv_k = 5;
  std::size_t explain_background = 100;
  std::uint64_t seed = 7;
  unsigned threads = 1;
};

// Relative input paths resolve against base_dir. Unknown keys are rejected.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {});

// Every setting that affects output bytes, in fixed key order. out_dir and
// threads are left out.
std::string canonical_config_json(const PipelineConfig& cfg);
std::string sha256_hex(std::string_view data);
std::string config_hash(const PipelineConfig& cfg);

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Adds a "provenance" member to a JSON object.
std::string stamp_json(std::string_view json, const Provenance& p);
// Prepends a "# config_hash=...,seed=..." line.
std::string stamp_csv(std::string_view csv, const Provenance& p);
// Hash of the canonical JSON of a subcommand's own settings.
Provenance provenance_for(std::string_view settings_json, std::uint64_t seed);

// kMissingFile naming the path.
std::string read_text(const std::filesystem::path& p);

// Files are written as "<name>.partial" and renamed by commit(); a failed
// run leaves the partial names behind.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  void write(const std::string& name, std::string_view content);
  void commit();
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> pending_;
};

// Writes one file through a .partial rename.
void write_file(const std::filesystem::path& p, std::string_view content);

// Runs f(), prefixing any library error message with the stage name.
template <class F>
auto in_stage(std::string_view stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.message(), e.line());
  }
}

// Stages.
Session ingest_files(const InputPaths& in, const std::string& label);

struct PreprocessOutput {
  Session session;
  signal::TrimResult audit;  // outliers of the ONA series; nothing is removed here
};
PreprocessOutput preprocess(Session s, const signal::OnaConfig& ona, const signal::TrimConfig& trim);

struct AlignOutput {
  Session session;
  align::AlignmentResult result;
};
// Shifts bc_post (and bc_raw) by the lag that best matches `activity`.
AlignOutput align_session(Session s, const align::GridSeries& activity, std::int64_t max_shift,
                          std::int64_t resample_step);

std::vector<vision::Frame> load_detections(const std::filesystem::path& p);
// A .pgm file, or the first .pgm (by name) in a directory.
vision::GrayImage load_background(const std::filesystem::path& p);

struct VisionOutput {
  vision::LaneGeometry lanes;
  std::vector<vision::Track> tracks;
  std::vector<DetectionEvent> events;
  vision::CountReport counts;
};
VisionOutput run_vision(std::span<const vision::Frame> frames, const vision::LaneGeometry& lanes,
                        const VisionSettings& settings, const vision::CountOptions& counts);

features::FeatureTable build_features(const vision::CountReport& counts, const Session& s,
                                      const features::JoinConfig& join);

// {"provenance": ..., "rows": [...]}; the loader also takes a bare row array.
std::string table_to_json(std::span<const FeatureRow> rows, const Provenance& p);
std::vector<FeatureRow> table_from_json(std::string_view text);

using FitFn = std::function<model::Model(const model::Dataset&)>;

struct Evaluation {
  std::vector<std::string> candidate_features;
  std::vector<std::string> features;  // after the correlation filter
  std::optional<features::CorrelationReport> correlation;
  eval::Split split;  // train side after trimming
  std::vector<signal::RemovedRow> trimmed;
  model::Model model;
  model::LinearModel baseline;  // mean-imputed
  eval::EvalReport metrics;
  eval::EvalReport baseline_metrics;
  eval::Comparison comparison;
  std::vector<double> truth;  // test side, split order
  std::vector<double> predicted;
  std::vector<double> baseline_predicted;
  model::Dataset train;
  model::Dataset test;
};

struct EvaluationSettings {
  eval::SplitSpec split;
  signal::TrimConfig trim;
  std::optional<double> corr_threshold;
  TargetKind target = TargetKind::kPost;
  bool include_traffic = true;
  std::vector<std::string> features;  // empty: the default set
};

// Split, train-only trim, train-only correlation filter, fit, and test
// metrics with a paired comparison against the linear baseline.
Evaluation evaluate_table(std::span<const FeatureRow> rows, const EvaluationSettings& settings,
                          const FitFn& fit);

struct ReportInputs {
  const Evaluation* evaluation = nullptr;
  std::span<const FeatureRow> rows;
  std::optional<SessionAlignment> alignment;
  const model::GridResult* tuning = nullptr;
  std::vector<explain::Importance> shap_ranking;
  std::string model_kind;
};

// "bctrace.report" JSON: metrics, baseline, split manifests and test
// predictions.
std::string report_json(const ReportInputs& in, const Provenance& p);

// From a report document: metrics table and a predicted-vs-observed SVG.
std::string metrics_csv(std::string_view report);
std::string prediction_svg(std::string_view report);

std::string shap_json(std::span<const explain::ShapReport> reports,
                      std::span<const explain::Importance> ranking, const Provenance& p);

// The whole chain. Returns the output directory.
std::filesystem::path run_pipeline(const PipelineConfig& cfg);

// Writes the generated inputs and ground truth into dir.
void write_scenario(const synth::Scenario& s, const std::filesystem::path& dir);

}  // namespace bctrace::pipeline
