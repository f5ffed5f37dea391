#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spmm/ingest.hpp"
#include "spmm/matcher.hpp"
#include "spmm/staypoint.hpp"

namespace spmm {

/// Longest common subsequence length of two edge-id sequences.
std::size_t correct_link_count(const std::vector<std::string>& result,
                               const std::vector<std::string>& truth);

struct RunMetrics {
  std::size_t correct_links = 0;
  std::size_t total_truth_links = 0;
  std::size_t input_points = 0;
  double matching_wall_time = 0.0;  ///< seconds, median over repetitions
  double per_point_time = 0.0;      ///< microseconds

  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct ClusteringSummary {
  double eps = 0.0;
  std::size_t min_pts = 0;
  std::size_t clusters = 0;
  std::size_t noise = 0;
  std::size_t output_size = 0;
  double wall_time_s = 0.0;

  friend bool operator==(const ClusteringSummary&, const ClusteringSummary&) = default;
};

struct ComparisonReport {
  RunMetrics raw;
  RunMetrics reduced;
  double volume_reduction_pct = 0.0;
  double time_reduction_pct = 0.0;
  double speed_gain_pct = 0.0;  ///< per-point time reduction
  long accuracy_delta = 0;      ///< reduced.correct_links - raw.correct_links
  ClusteringSummary clustering;
  std::vector<ClusteringSummary> eps_sweep;

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

/// Fills the derived percentages from the raw counts and times.
void finalize(ComparisonReport& report);

struct PipelineOptions {
  std::size_t timing_repetitions = 5;
  std::vector<double> eps_sweep;  ///< extra eps values summarized for plotting
};

struct PipelineOutput {
  ComparisonReport report;
  ClusterLabels labels;
  std::vector<StayPoint> stay_points;
  ReducedTrajectory reduced;
  MatchResult raw_match;
  MatchResult reduced_match;
};

/// Raw matching, then DBSCAN -> reduce -> matching on the reduced
/// trajectory, with identical settings for both matching runs. Only the
/// matching loop is timed.
PipelineOutput run_pipeline(const RoadNetwork& net, const Trajectory& traj,
                            const GroundTruthRoute& truth, const DbscanParams& dbscan_params,
                            const MatcherSettings& settings = {},
                            const PipelineOptions& options = {});

ClusteringSummary summarize_clustering(const Trajectory& traj, const DbscanParams& params);

/// Writes report.json plus eps_sweep.csv, timing.csv, volume.csv and
/// speed.csv into `dir` (created if missing).
void export_report(const ComparisonReport& report, const std::filesystem::path& dir);
ComparisonReport read_report(const std::filesystem::path& report_json);

struct DwellSpec {
  double start_s = 0.0;     ///< seconds after trip start
  double duration_s = 60.0;
  double sigma_m = 3.0;     ///< jitter of the emitted fixes, truncated at 3 sigma
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::size_t road_count = 40;  ///< lower bound on grid edges
  double block_m = 200.0;
  std::size_t route_edges = 10;
  double speed_mps = 12.0;
  double move_sigma_m = 2.0;
  std::vector<DwellSpec> dwells;
  GeoPoint origin{47.62, -122.33};
};

struct InjectedDwell {
  DwellSpec spec;
  GeoPoint center;                  ///< frozen true position
  std::size_t first_record = 0;
  std::size_t record_count = 0;
};

struct SyntheticScenario {
  RoadNetwork network;
  Trajectory trajectory;
  GroundTruthRoute truth;
  std::vector<InjectedDwell> dwells;
};

/// Grid network, a random non-repeating route, and 1 Hz fixes along it with
/// Gaussian jitter. Inside each dwell window the true position is frozen and
/// only the jitter moves. Pure function of the spec.
SyntheticScenario generate_scenario(const ScenarioSpec& spec);

}  // namespace spmm
