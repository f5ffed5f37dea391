#include "spmm/evalbench.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace spmm {

using nlohmann::json;

std::size_t correct_link_count(const std::vector<std::string>& result,
                               const std::vector<std::string>& truth) {
  const std::size_t n = result.size();
  const std::size_t m = truth.size();
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = result[i - 1] == truth[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

double pct_drop(double before, double after) {
  return before > 0 ? 100.0 * (before - after) / before : 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Matches once for the result and `reps` times for the timing median.
MatchResult timed_match(const RoadNetwork& net, const Trajectory& traj,
                        const MatcherSettings& settings, std::size_t reps, double& median_s) {
  MatchResult first = match_trajectory(net, traj, settings);
  std::vector<double> times{first.wall_time_s};
  for (std::size_t r = 1; r < reps; ++r) {
    times.push_back(match_trajectory(net, traj, settings).wall_time_s);
  }
  median_s = median(std::move(times));
  return first;
}

RunMetrics metrics_for(const MatchResult& m, const GroundTruthRoute& truth, double wall) {
  RunMetrics r;
  r.correct_links = correct_link_count(m.edge_sequence, truth.edge_ids);
  r.total_truth_links = truth.size();
  r.input_points = m.total_points;
  r.matching_wall_time = wall;
  r.per_point_time = m.total_points ? 1e6 * wall / static_cast<double>(m.total_points) : 0.0;
  return r;
}

}  // namespace

void finalize(ComparisonReport& r) {
  r.volume_reduction_pct =
      pct_drop(static_cast<double>(r.raw.input_points), static_cast<double>(r.reduced.input_points));
  r.time_reduction_pct = pct_drop(r.raw.matching_wall_time, r.reduced.matching_wall_time);
  r.speed_gain_pct = pct_drop(r.raw.per_point_time, r.reduced.per_point_time);
  r.accuracy_delta =
      static_cast<long>(r.reduced.correct_links) - static_cast<long>(r.raw.correct_links);
}

ClusteringSummary summarize_clustering(const Trajectory& traj, const DbscanParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto labels = dbscan(traj, params);
  const auto t1 = std::chrono::steady_clock::now();
  ClusteringSummary s;
  s.eps = params.eps;
  s.min_pts = params.min_pts;
  s.clusters = static_cast<std::size_t>(labels.cluster_count);
  s.noise = labels.noise_count();
  s.output_size = s.clusters + s.noise;
  s.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  return s;
}

PipelineOutput run_pipeline(const RoadNetwork& net, const Trajectory& traj,
                            const GroundTruthRoute& truth, const DbscanParams& dbscan_params,
                            const MatcherSettings& settings, const PipelineOptions& options) {
  validate(traj);
  const std::size_t reps = std::max<std::size_t>(1, options.timing_repetitions);
  PipelineOutput out;

  double raw_wall = 0.0;
  out.raw_match = timed_match(net, traj, settings, reps, raw_wall);

  const auto t0 = std::chrono::steady_clock::now();
  out.labels = dbscan(traj, dbscan_params);
  const auto t1 = std::chrono::steady_clock::now();
  out.stay_points = summarize_clusters(traj, out.labels);
  out.reduced = reduce_trajectory(traj, out.labels, out.stay_points);

  double reduced_wall = 0.0;
  out.reduced_match = timed_match(net, out.reduced.trajectory, settings, reps, reduced_wall);

  auto& rep = out.report;
  rep.raw = metrics_for(out.raw_match, truth, raw_wall);
  rep.reduced = metrics_for(out.reduced_match, truth, reduced_wall);
  rep.clustering.eps = dbscan_params.eps;
  rep.clustering.min_pts = dbscan_params.min_pts;
  rep.clustering.clusters = static_cast<std::size_t>(out.labels.cluster_count);
  rep.clustering.noise = out.labels.noise_count();
  rep.clustering.output_size = out.reduced.trajectory.size();
  rep.clustering.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  for (double eps : options.eps_sweep) {
    DbscanParams p = dbscan_params;
    p.eps = eps;
    rep.eps_sweep.push_back(summarize_clustering(traj, p));
  }
  finalize(rep);
  return out;
}

// ---------------------------------------------------------------------------
// Report files

namespace {

json run_to_json(const RunMetrics& r) {
  return {{"correct_links", r.correct_links},
          {"total_truth_links", r.total_truth_links},
          {"input_points", r.input_points}};
}

json clustering_to_json(const ClusteringSummary& c) {
  return {{"eps", c.eps},
          {"min_pts", c.min_pts},
          {"clusters", c.clusters},
          {"noise", c.noise},
          {"output_size", c.output_size}};
}

ClusteringSummary clustering_from_json(const json& j) {
  ClusteringSummary c;
  c.eps = j.at("eps").get<double>();
  c.min_pts = j.at("min_pts").get<std::size_t>();
  c.clusters = j.at("clusters").get<std::size_t>();
  c.noise = j.at("noise").get<std::size_t>();
  c.output_size = j.at("output_size").get<std::size_t>();
  return c;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace

void export_report(const ComparisonReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  // Deterministic fields first; everything measured by a clock lives under
  // "timing" and in timing.csv / speed.csv.
  json j;
  j["raw"] = run_to_json(r.raw);
  j["reduced"] = run_to_json(r.reduced);
  j["volume_reduction_pct"] = r.volume_reduction_pct;
  j["accuracy_delta"] = r.accuracy_delta;
  j["clustering"] = clustering_to_json(r.clustering);
  j["eps_sweep"] = json::array();
  for (const auto& s : r.eps_sweep) j["eps_sweep"].push_back(clustering_to_json(s));
  j["timing"] = {{"raw_matching_wall_time_s", r.raw.matching_wall_time},
                 {"reduced_matching_wall_time_s", r.reduced.matching_wall_time},
                 {"raw_per_point_time_us", r.raw.per_point_time},
                 {"reduced_per_point_time_us", r.reduced.per_point_time},
                 {"time_reduction_pct", r.time_reduction_pct},
                 {"speed_gain_pct", r.speed_gain_pct},
                 {"clustering_wall_time_s", r.clustering.wall_time_s}};
  j["timing"]["eps_sweep_wall_time_s"] = json::array();
  for (const auto& s : r.eps_sweep) j["timing"]["eps_sweep_wall_time_s"].push_back(s.wall_time_s);
  open_out(dir / "report.json") << j.dump(2) << '\n';

  auto sweep = open_out(dir / "eps_sweep.csv");
  sweep << "eps,clusters,noise,output_size\n";
  for (const auto& s : r.eps_sweep) {
    sweep << format_double(s.eps) << ',' << s.clusters << ',' << s.noise << ',' << s.output_size
          << '\n';
  }
  auto timing = open_out(dir / "timing.csv");
  timing << "run,matching_wall_time_s\n"
         << "raw," << format_double(r.raw.matching_wall_time) << '\n'
         << "reduced," << format_double(r.reduced.matching_wall_time) << '\n';
  auto volume = open_out(dir / "volume.csv");
  volume << "run,input_points\n"
         << "raw," << r.raw.input_points << '\n'
         << "reduced," << r.reduced.input_points << '\n';
  auto speed = open_out(dir / "speed.csv");
  speed << "run,per_point_time_us\n"
        << "raw," << format_double(r.raw.per_point_time) << '\n'
        << "reduced," << format_double(r.reduced.per_point_time) << '\n';
}

ComparisonReport read_report(const std::filesystem::path& report_json) {
  std::ifstream in(report_json);
  if (!in) throw ParseError(ParseErrorKind::Io, 0, "cannot open " + report_json.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw ParseError(ParseErrorKind::Syntax, 0, ex.what());
  }
  ComparisonReport r;
  auto read_run = [&](const json& jr, RunMetrics& m) {
    m.correct_links = jr.at("correct_links").get<std::size_t>();
    m.total_truth_links = jr.at("total_truth_links").get<std::size_t>();
    m.input_points = jr.at("input_points").get<std::size_t>();
  };
  read_run(j.at("raw"), r.raw);
  read_run(j.at("reduced"), r.reduced);
  r.clustering = clustering_from_json(j.at("clustering"));
  for (const auto& s : j.at("eps_sweep")) r.eps_sweep.push_back(clustering_from_json(s));
  const auto& t = j.at("timing");
  r.raw.matching_wall_time = t.at("raw_matching_wall_time_s").get<double>();
  r.reduced.matching_wall_time = t.at("reduced_matching_wall_time_s").get<double>();
  r.raw.per_point_time = t.at("raw_per_point_time_us").get<double>();
  r.reduced.per_point_time = t.at("reduced_per_point_time_us").get<double>();
  r.clustering.wall_time_s = t.at("clustering_wall_time_s").get<double>();
  const auto sweep_times = t.value("eps_sweep_wall_time_s", std::vector<double>{});
  for (std::size_t i = 0; i < r.eps_sweep.size() && i < sweep_times.size(); ++i) {
    r.eps_sweep[i].wall_time_s = sweep_times[i];
  }
  r.volume_reduction_pct = j.at("volume_reduction_pct").get<double>();
  r.time_reduction_pct = t.at("time_reduction_pct").get<double>();
  r.speed_gain_pct = t.at("speed_gain_pct").get<double>();
  r.accuracy_delta = j.at("accuracy_delta").get<long>();
  return r;
}

// ---------------------------------------------------------------------------
// Synthetic scenarios

namespace {

struct GridNode {
  std::size_t i, j;
};

std::string node_name(std::size_t i, std::size_t j) { return fmt::format("n{}_{}", i, j); }

}  // namespace

SyntheticScenario generate_scenario(const ScenarioSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::size_t n = 2;
  while (2 * n * (n - 1) < spec.road_count) ++n;

  const Projection local(spec.origin);
  auto node_xy = [&](std::size_t i, std::size_t j) {
    return PlanarPoint(static_cast<double>(i) * spec.block_m, static_cast<double>(j) * spec.block_m);
  };

  struct GridEdge {
    std::string id;
    GridNode a, b;
  };
  std::vector<GridEdge> grid;
  std::vector<RoadNetwork::EdgeInput> inputs;
  auto add_edge = [&](std::string id, GridNode a, GridNode b) {
    const PlanarPoint pa = node_xy(a.i, a.j), pb = node_xy(b.i, b.j);
    RoadNetwork::EdgeInput e;
    e.edge_id = id;
    e.node_from = node_name(a.i, a.j);
    e.node_to = node_name(b.i, b.j);
    e.vertices = {local.unproject(pa), local.unproject(0.5 * (pa + pb)), local.unproject(pb)};
    inputs.push_back(std::move(e));
    grid.push_back({std::move(id), a, b});
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i + 1 < n) add_edge(fmt::format("h{}_{}", i, j), {i, j}, {i + 1, j});
      if (j + 1 < n) add_edge(fmt::format("v{}_{}", i, j), {i, j}, {i, j + 1});
    }
  }

  SyntheticScenario sc;
  sc.network = RoadNetwork::build(inputs);

  // Route: self-avoiding random walk over nodes; restart from a fresh start
  // node when it gets stuck and keep the longest attempt.
  std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
  std::vector<std::size_t> best_edges;
  GridNode best_start{0, 0};
  for (int attempt = 0; attempt < 200 && best_edges.size() < spec.route_edges; ++attempt) {
    GridNode at{pick_node(rng), pick_node(rng)};
    const GridNode start = at;
    std::set<std::pair<std::size_t, std::size_t>> visited{{at.i, at.j}};
    std::vector<std::size_t> edges;
    while (edges.size() < spec.route_edges) {
      std::vector<std::size_t> options;
      for (std::size_t e = 0; e < grid.size(); ++e) {
        const auto& g = grid[e];
        const bool from_a = g.a.i == at.i && g.a.j == at.j;
        const bool from_b = g.b.i == at.i && g.b.j == at.j;
        if (!from_a && !from_b) continue;
        const GridNode other = from_a ? g.b : g.a;
        if (!visited.count({other.i, other.j})) options.push_back(e);
      }
      if (options.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      const std::size_t e = options[pick(rng)];
      const auto& g = grid[e];
      at = (g.a.i == at.i && g.a.j == at.j) ? g.b : g.a;
      visited.insert({at.i, at.j});
      edges.push_back(e);
    }
    if (edges.size() > best_edges.size()) {
      best_edges = std::move(edges);
      best_start = start;
    }
  }
  GridNode at = best_start;
  std::vector<PlanarPoint> path{node_xy(at.i, at.j)};
  for (auto e : best_edges) {
    const auto& g = grid[e];
    at = (g.a.i == at.i && g.a.j == at.j) ? g.b : g.a;
    path.push_back(node_xy(at.i, at.j));
    sc.truth.edge_ids.push_back(g.id);
  }
  const Polyline route(path);

  std::normal_distribution<double> gauss(0.0, 1.0);
  auto jitter = [&](double sigma) {
    if (sigma <= 0) return PlanarPoint(PlanarPoint::Zero());
    for (;;) {
      PlanarPoint d(sigma * gauss(rng), sigma * gauss(rng));
      if (d.norm() <= 3.0 * sigma) return d;
    }
  };

  for (const auto& d : spec.dwells) sc.dwells.push_back({d, {}, 0, 0});

  constexpr double kEpoch = 1.7e9;
  sc.trajectory.id = fmt::format("synthetic-{}", spec.seed);
  double arc = 0.0;
  for (std::size_t t = 0;; ++t) {
    const double ts = static_cast<double>(t);
    InjectedDwell* dwell = nullptr;
    for (auto& d : sc.dwells) {
      if (ts >= d.spec.start_s && ts < d.spec.start_s + d.spec.duration_s) dwell = &d;
    }
    const PlanarPoint truth_xy = point_at_offset(route, arc);
    const PlanarPoint fix = truth_xy + jitter(dwell ? dwell->spec.sigma_m : spec.move_sigma_m);
    if (dwell) {
      if (dwell->record_count == 0) {
        dwell->first_record = sc.trajectory.records.size();
        dwell->center = local.unproject(truth_xy);
      }
      ++dwell->record_count;
    }
    sc.trajectory.records.push_back(
        {kEpoch + ts, local.unproject(fix), sc.trajectory.records.size()});
    if (arc >= route.length()) break;
    if (!dwell) arc = std::min(route.length(), arc + spec.speed_mps);
  }
  return sc;
}

}  // namespace spmm
