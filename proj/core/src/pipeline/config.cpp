#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "bctrace/pipeline.hpp"

namespace bctrace::pipeline {
namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;

void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw Error(ErrorCode::kTypeMismatch, fmt::format("'{}' must be an object", where));
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw Error(ErrorCode::kBadConfig, fmt::format("unknown key '{}' in '{}'", k, where));
    }
  }
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || p == "auto" || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

ojson grid_json(const model::GridSpec& g) {
  ojson j;
  j["model"] = model::to_string(g.kind);
  j["n_estimators"] = g.n_estimators;
  j["learning_rate"] = g.learning_rate;
  j["max_depth"] = ojson::array();
  for (const auto& d : g.max_depth) j["max_depth"].push_back(d ? ojson(*d) : ojson());
  j["min_samples_split"] = g.min_samples_split;
  j["lambda"] = g.lambda;
  return j;
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  try {
    const auto j = json::parse(text);
    only_keys(j, "config",
              {"inputs", "scenario", "out_dir", "label", "lane_count", "ona", "trim", "align", "vision",
               "features", "split", "model", "grid", "cv_k", "explain", "seed", "threads"});
    if (j.contains("inputs")) {
      const auto& in = j.at("inputs");
      only_keys(in, "inputs", {"ae51", "events", "weather", "traffic", "detections", "frames", "lanes"});
      take(in, "ae51", c.inputs.ae51);
      take(in, "events", c.inputs.events);
      take(in, "weather", c.inputs.weather);
      take(in, "traffic", c.inputs.traffic);
      take(in, "detections", c.inputs.detections);
      take(in, "frames", c.inputs.frames);
      take(in, "lanes", c.inputs.lanes);
      for (auto* p : {&c.inputs.ae51, &c.inputs.events, &c.inputs.weather, &c.inputs.traffic,
                      &c.inputs.detections, &c.inputs.frames, &c.inputs.lanes}) {
        *p = resolve(*p, base_dir);
      }
    }
    if (j.contains("scenario") && !j.at("scenario").is_null()) {
      c.scenario = synth::parse_scenario_json(j.at("scenario").dump());
      c.lane_count = c.scenario->lane_count;
    }
    take(j, "out_dir", c.out_dir);
    take(j, "label", c.label);
    take(j, "lane_count", c.lane_count);
    if (j.contains("ona")) {
      only_keys(j.at("ona"), "ona", {"delta_atn"});
      take(j.at("ona"), "delta_atn", c.ona.delta_atn);
    }
    if (j.contains("trim")) {
      const auto& t = j.at("trim");
      only_keys(t, "trim", {"mode", "level"});
      if (t.contains("mode")) {
        const auto m = t.at("mode").get<std::string>();
        if (m == "local") c.trim.mode = signal::TrimMode::kLocal;
        else if (m == "global") c.trim.mode = signal::TrimMode::kGlobal;
        else throw Error(ErrorCode::kBadConfig, fmt::format("unknown trim mode '{}'", m));
      }
      take(t, "level", c.trim.level);
    }
    if (j.contains("align")) {
      only_keys(j.at("align"), "align", {"max_shift", "resample_step"});
      take(j.at("align"), "max_shift", c.max_shift);
      take(j.at("align"), "resample_step", c.resample_step);
    }
    if (j.contains("vision")) {
      const auto& v = j.at("vision");
      only_keys(v, "vision",
                {"canny_low", "canny_high", "canny_sigma", "rho_res", "theta_res_deg", "vote_threshold",
                 "theta_min_deg", "theta_max_deg", "min_separation", "max_distance", "max_age",
                 "speed_eps", "min_stop"});
      auto& l = c.vision.lanes;
      take(v, "canny_low", l.canny.low);
      take(v, "canny_high", l.canny.high);
      take(v, "canny_sigma", l.canny.sigma);
      take(v, "rho_res", l.rho_res);
      if (v.contains("theta_res_deg")) l.theta_res = v.at("theta_res_deg").get<double>() * kDeg;
      take(v, "vote_threshold", l.vote_threshold);
      if (v.contains("theta_min_deg")) l.select.theta_min = v.at("theta_min_deg").get<double>() * kDeg;
      if (v.contains("theta_max_deg")) l.select.theta_max = v.at("theta_max_deg").get<double>() * kDeg;
      take(v, "min_separation", l.select.min_separation);
      take(v, "max_distance", c.vision.tracker.max_distance);
      take(v, "max_age", c.vision.tracker.max_age);
      take(v, "speed_eps", c.vision.speed_eps);
      take(v, "min_stop", c.vision.min_stop);
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      only_keys(f, "features",
                {"weather_lag", "weather_max_gap", "traffic_window", "target", "corr_threshold",
                 "include_traffic"});
      take(f, "weather_lag", c.join.weather_lag);
      take(f, "weather_max_gap", c.join.weather_max_gap);
      take(f, "traffic_window", c.join.traffic_window);
      if (f.contains("target")) {
        const auto t = f.at("target").get<std::string>();
        if (t == "post") c.join.target = TargetKind::kPost;
        else if (t == "raw") c.join.target = TargetKind::kRaw;
        else throw Error(ErrorCode::kBadConfig, fmt::format("unknown target '{}'", t));
      }
      if (f.contains("corr_threshold")) {
        const auto& t = f.at("corr_threshold");
        c.corr_threshold = t.is_null() ? std::nullopt : std::optional<double>(t.get<double>());
      }
      take(f, "include_traffic", c.include_traffic);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      only_keys(s, "split", {"kind", "train_fraction", "window_length", "k", "strata_bins"});
      if (s.contains("kind")) {
        const auto k = s.at("kind").get<std::string>();
        const auto kind = eval::parse_split_kind(k);
        if (!kind || *kind == eval::SplitKind::kKfold) {
          throw Error(ErrorCode::kBadConfig, fmt::format("split kind '{}' is not stratified or windowed", k));
        }
        c.split.kind = *kind;
      }
      take(s, "train_fraction", c.split.train_fraction);
      take(s, "window_length", c.split.window_length);
      take(s, "k", c.split.k);
      take(s, "strata_bins", c.split.strata_bins);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      only_keys(m, "model",
                {"kind", "n_estimators", "learning_rate", "max_depth", "lambda", "min_split_gain",
                 "min_samples_split"});
      if (m.contains("kind")) {
        const auto k = m.at("kind").get<std::string>();
        const auto kind = model::parse_model_kind(k);
        if (!kind) throw Error(ErrorCode::kBadConfig, fmt::format("unknown model kind '{}'", k));
        c.model = *kind;
      }
      take(m, "n_estimators", c.gbt.n_estimators);
      take(m, "learning_rate", c.gbt.learning_rate);
      take(m, "max_depth", c.gbt.max_depth);
      take(m, "lambda", c.gbt.lambda);
      take(m, "min_split_gain", c.gbt.min_split_gain);
      take(m, "min_samples_split", c.gbt.min_samples_split);
    }
    if (j.contains("grid") && !j.at("grid").is_null()) {
      const auto& g = j.at("grid");
      c.grid = g.is_string() ? model::parse_grid_json(read_text(resolve(g.get<std::string>(), base_dir)))
                             : model::parse_grid_json(g.dump());
    }
    take(j, "cv_k", c.cv_k);
    if (j.contains("explain")) {
      only_keys(j.at("explain"), "explain", {"background"});
      take(j.at("explain"), "background", c.explain_background);
    }
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kBadConfig, fmt::format("config: {}", e.what()));
  } catch (const json::out_of_range& e) {
    throw Error(ErrorCode::kMissingKey, fmt::format("config: {}", e.what()));
  } catch (const json::type_error& e) {
    throw Error(ErrorCode::kTypeMismatch, fmt::format("config: {}", e.what()));
  }
  if (!c.scenario && (c.inputs.ae51.empty() || c.inputs.events.empty() || c.inputs.weather.empty())) {
    throw Error(ErrorCode::kBadConfig, "config needs inputs.ae51, inputs.events and inputs.weather, or a scenario");
  }
  if (c.lane_count == 0) throw Error(ErrorCode::kBadConfig, "lane_count must be positive");
  if (c.cv_k < 2) throw Error(ErrorCode::kBadK, "cv_k must be at least 2");
  if (c.max_shift < 0 || c.resample_step <= 0) throw Error(ErrorCode::kBadConfig, "bad align settings");
  return c;
}

std::string canonical_config_json(const PipelineConfig& c) {
  ojson j;
  j["inputs"] = {{"ae51", c.inputs.ae51},         {"events", c.inputs.events},
                 {"weather", c.inputs.weather},   {"traffic", c.inputs.traffic},
                 {"detections", c.inputs.detections}, {"frames", c.inputs.frames},
                 {"lanes", c.inputs.lanes}};
  j["scenario"] = c.scenario ? ojson::parse(synth::scenario_to_json(*c.scenario)) : ojson();
  j["label"] = c.label;
  j["lane_count"] = c.lane_count;
  j["ona"] = {{"delta_atn", c.ona.delta_atn}};
  j["trim"] = {{"mode", c.trim.mode == signal::TrimMode::kLocal ? "local" : "global"},
               {"level", c.trim.level}};
  j["align"] = {{"max_shift", c.max_shift}, {"resample_step", c.resample_step}};
  const auto& l = c.vision.lanes;
  j["vision"] = {{"canny_low", l.canny.low},
                 {"canny_high", l.canny.high},
                 {"canny_sigma", l.canny.sigma},
                 {"rho_res", l.rho_res},
                 {"theta_res_deg", l.theta_res / kDeg},
                 {"vote_threshold", l.vote_threshold},
                 {"theta_min_deg", l.select.theta_min / kDeg},
                 {"theta_max_deg", l.select.theta_max / kDeg},
                 {"min_separation", l.select.min_separation},
                 {"max_distance", c.vision.tracker.max_distance},
                 {"max_age", c.vision.tracker.max_age},
                 {"speed_eps", c.vision.speed_eps},
                 {"min_stop", c.vision.min_stop}};
  j["features"] = {{"weather_lag", c.join.weather_lag},
                   {"weather_max_gap", c.join.weather_max_gap},
                   {"traffic_window", c.join.traffic_window},
                   {"target", c.join.target == TargetKind::kPost ? "post" : "raw"},
                   {"corr_threshold", c.corr_threshold ? ojson(*c.corr_threshold) : ojson()},
                   {"include_traffic", c.include_traffic}};
  j["split"] = {{"kind", eval::to_string(c.split.kind)},
                {"train_fraction", c.split.train_fraction},
                {"window_length", c.split.window_length},
                {"k", c.split.k},
                {"strata_bins", c.split.strata_bins}};
  j["model"] = {{"kind", model::to_string(c.model)},
                {"n_estimators", c.gbt.n_estimators},
                {"learning_rate", c.gbt.learning_rate},
                {"max_depth", c.gbt.max_depth},
                {"lambda", c.gbt.lambda},
                {"min_split_gain", c.gbt.min_split_gain},
                {"min_samples_split", c.gbt.min_samples_split}};
  j["grid"] = c.grid ? grid_json(*c.grid) : ojson();
  j["cv_k"] = c.cv_k;
  j["explain"] = {{"background", c.explain_background}};
  j["seed"] = c.seed;
  return j.dump();
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kInternal, "SHA-256 digest failed");
  }
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string config_hash(const PipelineConfig& cfg) { return sha256_hex(canonical_config_json(cfg)); }

std::string stamp_json(std::string_view text, const Provenance& p) {
  auto j = ojson::parse(text);
  if (!j.is_object()) throw Error(ErrorCode::kInternal, "only JSON objects can be stamped");
  ojson out;
  out["provenance"] = {{"config_hash", p.config_hash}, {"seed", p.seed}};
  for (auto& [k, v] : j.items()) {
    if (k != "provenance") out[k] = std::move(v);
  }
  return out.dump(1) + "\n";
}

std::string stamp_csv(std::string_view csv, const Provenance& p) {
  return fmt::format("# config_hash={},seed={}\n{}", p.config_hash, p.seed, csv);
}

Provenance provenance_for(std::string_view settings_json, std::uint64_t seed) {
  return Provenance{sha256_hex(settings_json), seed};
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in || std::filesystem::is_directory(p)) {
    throw Error(ErrorCode::kMissingFile, fmt::format("cannot read '{}'", p.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, std::string_view content) {
  ArtifactWriter w(p.parent_path().empty() ? std::filesystem::path(".") : p.parent_path());
  w.write(p.filename().string(), content);
  w.commit();
}

ArtifactWriter::ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::kMissingFile, fmt::format("cannot create '{}': {}", dir_.string(), ec.message()));
}

void ArtifactWriter::write(const std::string& name, std::string_view content) {
  const auto target = dir_ / (name + ".partial");
  std::filesystem::create_directories(target.parent_path());
  std::ofstream out(target, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kMissingFile, fmt::format("cannot write '{}'", target.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kMissingFile, fmt::format("short write to '{}'", target.string()));
  pending_.push_back(name);
}

void ArtifactWriter::commit() {
  for (const auto& name : pending_) {
    std::filesystem::rename(dir_ / (name + ".partial"), dir_ / name);
  }
  pending_.clear();
}

}  // namespace bctrace::pipeline
