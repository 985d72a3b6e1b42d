#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bctrace/dataset.hpp"
#include "bctrace/feature_row.hpp"
#include "bctrace/ingest.hpp"
#include "bctrace/vision.hpp"

namespace bctrace::features {

struct JoinConfig {
  std::int64_t weather_lag = 120;      // seconds before bin start
  std::int64_t weather_max_gap = 600;  // farthest acceptable weather sample
  std::int64_t traffic_window = 300;   // +/- seconds around bin start
  TargetKind target = TargetKind::kPost;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<UnixSeconds> dropped_no_target;  // bin starts
};

// One row per count bin. Historical weather comes from the sample nearest to
// bin_start - weather_lag (ties to the earlier sample); forecast samples, if
// any, from the one nearest bin_start. Traffic is optional per row. The BC
// columns read the aligned series at bin_start. Inputs may be in any order.
FeatureTable build_feature_table(const vision::CountReport& counts,
                                 std::span<const WeatherSample> weather,
                                 std::span<const TrafficDensitySample> traffic,
                                 const BcSeries& bc_post, const BcSeries* bc_raw,
                                 const std::string& dataset, const JoinConfig& cfg);

// "TotalVehicle", "LDPV_k", "HDV_k", "StopLDPV_k", "StopHDV_k" (k = 1..lanes),
// "his_temp", "his_wind", "his_humid" and, optionally, "traffic".
std::vector<std::string> default_feature_names(std::size_t lane_count, bool include_traffic);

// NaN for an absent optional value; kMissingKey for an unknown name.
double feature_value(const FeatureRow& row, std::string_view name);

bool any_traffic(std::span<const FeatureRow> rows);

// Rows whose target is missing raise kBadParams.
model::Dataset to_dataset(std::span<const FeatureRow> rows, std::span<const std::string> names,
                          TargetKind target);

struct DroppedFeature {
  std::string feature;
  std::string kept_partner;
  double r = 0.0;
};

struct CorrelationReport {
  std::vector<std::string> names;
  std::vector<double> matrix;  // names.size()^2, row-major
  std::vector<std::string> constant;
  std::vector<double> target_r;  // per feature, against the target column
  std::vector<DroppedFeature> dropped;

  double r(std::size_t i, std::size_t j) const { return matrix[i * names.size() + j]; }
};

// Pearson r over pairwise-complete rows. A constant column has r = 0 against
// everything else. Needs at least 3 rows.
CorrelationReport correlation_matrix(const model::Dataset& table);

struct FilterResult {
  model::Dataset table;  // kept columns in original order
  CorrelationReport report;
};

// While some pair has |r| > threshold, the strongest such pair loses the
// member less correlated with the target (ties: the lexicographically
// greater name). Dropped features that no longer conflict with any kept one
// are then restored, strongest first, so the kept set is maximal.
FilterResult filter_correlated(const model::Dataset& table, double threshold = 0.70);

std::string correlation_csv(const CorrelationReport& report);

}  // namespace bctrace::features
