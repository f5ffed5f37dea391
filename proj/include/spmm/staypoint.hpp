#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "spmm/ingest.hpp"
#include "spmm/spatial_index.hpp"

namespace spmm {

enum class MetricSpace {
  DegreeEuclidean,  ///< raw (lon, lat) degrees with the Euclidean norm
  MeterPlanar,      ///< local equirectangular meters around the centroid
};

struct DbscanParams {
  double eps = 0.00002;
  std::size_t min_pts = 3;
  MetricSpace metric = MetricSpace::DegreeEuclidean;
};

inline constexpr int kNoise = -1;

/// DBSCAN output: one label per record (kNoise or a cluster ordinal) plus a
/// core flag.
struct ClusterLabels {
  std::vector<int> label;
  std::vector<bool> core;
  int cluster_count = 0;

  std::size_t size() const { return label.size(); }
  std::size_t noise_count() const;
};

/// Collapsed cluster. x is mean longitude, y mean latitude (degrees).
struct StayPoint {
  int cluster_id = 0;
  double x = 0.0;
  double y = 0.0;
  double t_arrive = 0.0;
  double t_leave = 0.0;
  std::size_t member_count = 0;
};

/// Per-record origin in a reduced trajectory: kNoise for a record passed
/// through unchanged, otherwise the cluster it represents.
struct ReducedTrajectory {
  Trajectory trajectory;
  std::vector<int> provenance;
};

struct KnnCurve {
  std::size_t k = 0;
  std::vector<double> distances;  ///< ascending
};

struct ElbowCandidate {
  std::size_t index = 0;
  double distance = 0.0;
  double score = 0.0;  ///< discrete curvature of the normalized curve
};

/// Rows of (x, y) in the chosen metric space: (lon, lat) for degrees,
/// projected (east, north) meters for the planar space.
PointMatrix<double> metric_coordinates(const Trajectory& traj, MetricSpace metric);

/// Standard DBSCAN on an arbitrary point matrix. A point is core when its
/// closed eps-neighborhood (itself included) holds at least min_pts points.
/// Clusters are grown breadth-first from unvisited core points in row order;
/// a border point keeps the first cluster that reaches it.
template <typename Scalar>
ClusterLabels dbscan(const PointMatrix<Scalar>& points, Scalar eps, std::size_t min_pts) {
  if (!(eps > Scalar(0))) throw DomainError("eps must be positive");
  if (min_pts < 1) throw DomainError("min_pts must be at least 1");
  const auto n = static_cast<std::size_t>(points.rows());
  ClusterLabels out;
  out.label.assign(n, kNoise);
  out.core.assign(n, false);
  if (n == 0) return out;

  const PointGrid<Scalar> grid(points, eps);
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    neighbors[i] = grid.within(static_cast<Eigen::Index>(i), eps);
    out.core[i] = neighbors[i].size() >= min_pts;
  }

  std::vector<bool> assigned(n, false);
  std::deque<std::uint32_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!out.core[seed] || assigned[seed]) continue;
    const int cluster = out.cluster_count++;
    assigned[seed] = true;
    out.label[seed] = cluster;
    frontier.push_back(static_cast<std::uint32_t>(seed));
    while (!frontier.empty()) {
      const auto p = frontier.front();
      frontier.pop_front();
      for (auto q : neighbors[p]) {
        if (assigned[q]) continue;
        assigned[q] = true;
        out.label[q] = cluster;
        if (out.core[q]) frontier.push_back(q);
      }
    }
  }
  return out;
}

ClusterLabels dbscan(const Trajectory& traj, const DbscanParams& params);

/// Ascending list of every point's distance to its k-th nearest other point.
template <typename Scalar>
std::vector<Scalar> knn_distances(const PointMatrix<Scalar>& points, std::size_t k) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1 || k >= n) throw DomainError("k must satisfy 1 <= k < number of points");
  const Eigen::Matrix<Scalar, 1, 2> lo = points.colwise().minCoeff();
  const Eigen::Matrix<Scalar, 1, 2> hi = points.colwise().maxCoeff();
  Scalar extent = (hi - lo).maxCoeff();
  // About k+1 points per occupied cell on a uniform layout.
  Scalar cell = extent * std::sqrt(Scalar(k + 1) / Scalar(n));
  if (!(cell > Scalar(0))) cell = Scalar(1);
  const PointGrid<Scalar> grid(points, cell);
  std::vector<Scalar> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = grid.kth_neighbor_distance(static_cast<Eigen::Index>(i), k);
  }
  std::sort(d.begin(), d.end());
  return d;
}

KnnCurve knn_distance_curve(const Trajectory& traj, std::size_t k, MetricSpace metric);

/// Top-n points of the sorted curve ranked by discrete curvature after
/// normalizing both axes to [0, 1]. Advisory only.
std::vector<ElbowCandidate> elbow_candidates(const KnnCurve& curve, std::size_t n);

std::vector<StayPoint> summarize_clusters(const Trajectory& traj, const ClusterLabels& labels);

/// Replaces each cluster with a single record at its mean coordinates and
/// arrival time. Records are ordered by timestamp, ties by source index.
ReducedTrajectory reduce_trajectory(const Trajectory& traj, const ClusterLabels& labels,
                                    const std::vector<StayPoint>& stay_points);

/// Classic threshold detector: maximal runs whose consecutive haversine
/// steps are all below delta meters and that last longer than tau seconds.
std::vector<StayPoint> threshold_staypoint_detect(const Trajectory& traj, double delta_m,
                                                  double tau_s);

inline constexpr double kDefaultThresholdDelta = 10.0;
inline constexpr double kDefaultThresholdTau = 60.0;

void write_knn_curve(std::ostream& out, const KnnCurve& curve);
void write_stay_points(std::ostream& out, const std::vector<StayPoint>& sps);
void write_labels(std::ostream& out, const Trajectory& traj, const ClusterLabels& labels);

}  // namespace spmm
