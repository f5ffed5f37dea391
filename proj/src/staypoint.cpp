#include "spmm/staypoint.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>
#include <ostream>

namespace spmm {

std::size_t ClusterLabels::noise_count() const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), kNoise));
}

PointMatrix<double> metric_coordinates(const Trajectory& traj, MetricSpace metric) {
  PointMatrix<double> pts(static_cast<Eigen::Index>(traj.size()), 2);
  if (metric == MetricSpace::DegreeEuclidean) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto& p = traj.records[i].position;
      pts.row(static_cast<Eigen::Index>(i)) << p.lon, p.lat;
    }
    return pts;
  }
  const Projection proj(centroid(traj));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = proj.project(traj.records[i].position).transpose();
  }
  return pts;
}

ClusterLabels dbscan(const Trajectory& traj, const DbscanParams& params) {
  if (traj.empty()) throw DomainError("dbscan needs a non-empty trajectory");
  return dbscan(metric_coordinates(traj, params.metric), params.eps, params.min_pts);
}

KnnCurve knn_distance_curve(const Trajectory& traj, std::size_t k, MetricSpace metric) {
  if (k < 1 || k >= traj.size()) {
    throw DomainError(fmt::format("k must satisfy 1 <= k < {} (number of points), got {}",
                                  traj.size(), k));
  }
  return {k, knn_distances(metric_coordinates(traj, metric), k)};
}

std::vector<ElbowCandidate> elbow_candidates(const KnnCurve& curve, std::size_t n) {
  const auto& d = curve.distances;
  const std::size_t len = d.size();
  if (len < 3) throw DomainError("elbow detection needs at least 3 curve points");
  const double lo = d.front();
  const double range = d.back() - d.front();
  const double h = 1.0 / static_cast<double>(len - 1);
  auto y = [&](std::size_t i) { return range > 0 ? (d[i] - lo) / range : 0.0; };

  std::vector<ElbowCandidate> all(len);
  for (std::size_t i = 0; i < len; ++i) {
    all[i] = {i, d[i], 0.0};
    if (i == 0 || i + 1 == len) continue;
    const double d1 = (y(i + 1) - y(i - 1)) / (2 * h);
    const double d2 = (y(i + 1) - 2 * y(i) + y(i - 1)) / (h * h);
    all[i].score = std::abs(d2) / std::pow(1.0 + d1 * d1, 1.5);
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  all.resize(std::min(n, len));
  return all;
}

std::vector<StayPoint> summarize_clusters(const Trajectory& traj, const ClusterLabels& labels) {
  if (labels.size() != traj.size()) throw DomainError("labels do not match trajectory");
  std::vector<StayPoint> sps(static_cast<std::size_t>(labels.cluster_count));
  for (int c = 0; c < labels.cluster_count; ++c) sps[static_cast<std::size_t>(c)].cluster_id = c;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const int c = labels.label[i];
    if (c == kNoise) continue;
    auto& sp = sps[static_cast<std::size_t>(c)];
    const auto& r = traj.records[i];
    if (sp.member_count == 0) {
      sp.t_arrive = sp.t_leave = r.timestamp;
    } else {
      sp.t_arrive = std::min(sp.t_arrive, r.timestamp);
      sp.t_leave = std::max(sp.t_leave, r.timestamp);
    }
    sp.x += r.position.lon;
    sp.y += r.position.lat;
    ++sp.member_count;
  }
  for (auto& sp : sps) {
    if (sp.member_count == 0) throw DomainError("cluster without members");
    sp.x /= static_cast<double>(sp.member_count);
    sp.y /= static_cast<double>(sp.member_count);
  }
  return sps;
}

ReducedTrajectory reduce_trajectory(const Trajectory& traj, const ClusterLabels& labels,
                                    const std::vector<StayPoint>& stay_points) {
  if (labels.size() != traj.size() ||
      stay_points.size() != static_cast<std::size_t>(labels.cluster_count)) {
    throw DomainError("labels and stay points do not match trajectory");
  }
  struct Entry {
    TrajectoryRecord record;
    int provenance;
  };
  std::vector<Entry> entries;
  std::vector<bool> emitted(stay_points.size(), false);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const int c = labels.label[i];
    const auto& r = traj.records[i];
    if (c == kNoise) {
      entries.push_back({r, kNoise});
      continue;
    }
    // The first member in file order is the earliest (timestamps never decrease).
    const auto cu = static_cast<std::size_t>(c);
    if (emitted[cu]) continue;
    emitted[cu] = true;
    const auto& sp = stay_points[cu];
    entries.push_back({{sp.t_arrive, GeoPoint{sp.y, sp.x}, r.source_index}, c});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.record.timestamp != b.record.timestamp) return a.record.timestamp < b.record.timestamp;
    return a.record.source_index < b.record.source_index;
  });
  ReducedTrajectory out;
  out.trajectory.id = traj.id;
  out.trajectory.records.reserve(entries.size());
  out.provenance.reserve(entries.size());
  for (auto& e : entries) {
    out.trajectory.records.push_back(e.record);
    out.provenance.push_back(e.provenance);
  }
  return out;
}

std::vector<StayPoint> threshold_staypoint_detect(const Trajectory& traj, double delta_m,
                                                  double tau_s) {
  if (!(delta_m > 0) || !(tau_s > 0)) throw DomainError("delta and tau must be positive");
  std::vector<StayPoint> out;
  const auto& rec = traj.records;
  std::size_t i = 0;
  while (i < rec.size()) {
    std::size_t j = i;
    while (j + 1 < rec.size() &&
           haversine_distance(rec[j].position, rec[j + 1].position) < delta_m) {
      ++j;
    }
    if (j > i && rec[j].timestamp - rec[i].timestamp > tau_s) {
      StayPoint sp;
      sp.cluster_id = static_cast<int>(out.size());
      sp.t_arrive = rec[i].timestamp;
      sp.t_leave = rec[j].timestamp;
      sp.member_count = j - i + 1;
      for (std::size_t k = i; k <= j; ++k) {
        sp.x += rec[k].position.lon;
        sp.y += rec[k].position.lat;
      }
      sp.x /= static_cast<double>(sp.member_count);
      sp.y /= static_cast<double>(sp.member_count);
      out.push_back(sp);
    }
    i = j + 1;
  }
  return out;
}

void write_knn_curve(std::ostream& out, const KnnCurve& curve) {
  out << "rank,distance\n";
  for (std::size_t i = 0; i < curve.distances.size(); ++i) {
    out << i << ',' << format_double(curve.distances[i]) << '\n';
  }
}

void write_stay_points(std::ostream& out, const std::vector<StayPoint>& sps) {
  out << "cluster_id,lat,lon,t_arrive,t_leave,count\n";
  for (const auto& sp : sps) {
    out << sp.cluster_id << ',' << format_double(sp.y) << ',' << format_double(sp.x) << ','
        << format_double(sp.t_arrive) << ',' << format_double(sp.t_leave) << ','
        << sp.member_count << '\n';
  }
}

void write_labels(std::ostream& out, const Trajectory& traj, const ClusterLabels& labels) {
  out << "source_index,label,core\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << traj.records[i].source_index << ',' << labels.label[i] << ','
        << (labels.core[i] ? 1 : 0) << '\n';
  }
}

}  // namespace spmm
