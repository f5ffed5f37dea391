#include "spmm/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "spmm/evalbench.hpp"
#include "spmm/ingest.hpp"
#include "spmm/matcher.hpp"
#include "spmm/staypoint.hpp"

namespace spmm {

namespace fs = std::filesystem;

namespace {

/// Failure tied to an exit code, raised from subcommand bodies.
struct CliFailure {
  int code;
  std::string message;
};

const std::map<std::string, InputFormat> kFormats{{"native", InputFormat::Native},
                                                  {"benchmark", InputFormat::Benchmark}};
const std::map<std::string, MetricSpace> kMetrics{{"degree", MetricSpace::DegreeEuclidean},
                                                  {"meter", MetricSpace::MeterPlanar}};

struct Options {
  std::string traj, network, truth, config, out, out_dir, edges;
  std::string traj_format = "native";
  std::string network_format = "native";
  std::string metric_name = "degree";
  std::size_t k = 0;
  double eps = 0.0;
  std::size_t min_pts = 3;
  std::size_t reps = 5;
  std::vector<double> sweep;
  std::uint64_t seed = 1;
  std::size_t roads = 40;
  std::size_t route_edges = 10;
  double speed = 12.0;
  double move_sigma = 2.0;
  std::vector<std::string> dwells;

  MetricSpace metric() const { return kMetrics.at(metric_name); }
};

template <typename F>
auto stage(const char* what, int code, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CliFailure&) {
    throw;
  } catch (const std::exception& ex) {
    throw CliFailure{code, fmt::format("{}: {}", what, ex.what())};
  }
}

Trajectory load_traj(const Options& o) {
  return stage("trajectory", kExitInput, [&] {
    TrajectoryFormat f;
    f.format = kFormats.at(o.traj_format);
    return parse_trajectory(o.traj, f);
  });
}

RoadNetwork load_network(const Options& o) {
  return stage("network", kExitInput, [&] {
    NetworkFormat f;
    f.format = kFormats.at(o.network_format);
    return parse_road_network(o.network, f);
  });
}

MatcherSettings load_settings(const Options& o) {
  if (o.config.empty()) return {};
  return stage("matcher config", kExitInput, [&] { return load_matcher_settings(o.config); });
}

std::ofstream create(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw CliFailure{kExitInput, "cannot write " + p.string()};
  return out;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliFailure{kExitInput, "cannot create " + dir + ": " + ec.message()};
  return dir;
}

DwellSpec parse_dwell(const std::string& text) {
  // start:duration:sigma
  DwellSpec d;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> d.start_s >> c1 >> d.duration_s >> c2 >> d.sigma_m) || c1 != ':' || c2 != ':') {
    throw CLI::ValidationError("--dwell", "expected start:duration:sigma, got '" + text + "'");
  }
  return d;
}

void write_match_files(const fs::path& dir, const std::string& prefix, const MatchResult& m) {
  auto csv = create(dir / (prefix + "matched.csv"));
  write_match_result(csv, m);
  auto seq = create(dir / (prefix + "edges.txt"));
  write_edge_sequence(seq, m);
}

int cmd_knn_curve(const Options& o, std::ostream& out) {
  const auto traj = load_traj(o);
  const auto curve =
      stage("knn-curve", kExitInput, [&] { return knn_distance_curve(traj, o.k, o.metric()); });
  auto f = create(o.out);
  write_knn_curve(f, curve);
  out << fmt::format("points={} k={}\n", curve.distances.size(), curve.k);
  if (curve.distances.size() >= 3) {
    out << "elbow candidates (rank,distance,score):\n";
    for (const auto& c : elbow_candidates(curve, 5)) {
      out << fmt::format("  {},{},{:.6g}\n", c.index, format_double(c.distance), c.score);
    }
  }
  return kExitOk;
}

struct Reduction {
  Trajectory traj;
  ClusterLabels labels;
  std::vector<StayPoint> stay_points;
  ReducedTrajectory reduced;
};

Reduction reduce(const Options& o) {
  Reduction r{load_traj(o), {}, {}, {}};
  const DbscanParams params{o.eps, o.min_pts, o.metric()};
  stage("dbscan", kExitDomain, [&] {
    r.labels = dbscan(r.traj, params);
    r.stay_points = summarize_clusters(r.traj, r.labels);
    r.reduced = reduce_trajectory(r.traj, r.labels, r.stay_points);
    return 0;
  });
  return r;
}

void print_counts(std::ostream& out, const Reduction& r) {
  out << fmt::format("cluster_count={}\nnoise_count={}\noutput_size={}\n", r.labels.cluster_count,
                     r.labels.noise_count(), r.reduced.trajectory.size());
}

int cmd_staypoints(const Options& o, std::ostream& out) {
  const auto r = reduce(o);
  const auto dir = ensure_dir(o.out_dir);
  auto sp = create(dir / "staypoints.csv");
  write_stay_points(sp, r.stay_points);
  auto lb = create(dir / "labels.csv");
  write_labels(lb, r.traj, r.labels);
  auto rd = create(dir / "reduced.csv");
  write_trajectory(rd, r.reduced.trajectory);
  print_counts(out, r);
  return kExitOk;
}

int cmd_reduce(const Options& o, std::ostream& out) {
  const auto r = reduce(o);
  auto rd = create(o.out);
  write_trajectory(rd, r.reduced.trajectory);
  print_counts(out, r);
  return kExitOk;
}

int cmd_match(const Options& o, std::ostream& out) {
  const auto net = load_network(o);
  const auto traj = load_traj(o);
  const auto settings = load_settings(o);
  if (traj.size() < 2) throw CliFailure{kExitDomain, "matching needs at least 2 trajectory points"};
  const auto result =
      stage("match", kExitDomain, [&] { return match_trajectory(net, traj, settings); });
  const auto dir = ensure_dir(o.out_dir);
  write_match_files(dir, "", result);
  out << fmt::format("points={}\nedges={}\nwall_time_s={:.6f}\n", result.total_points,
                     result.edge_sequence.size(), result.wall_time_s);
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto net = load_network(o);
  const auto truth = stage("truth", kExitInput, [&] { return parse_ground_truth(o.truth, net); });
  const auto seq = stage("edges", kExitInput, [&] { return parse_ground_truth(o.edges, net); });
  out << fmt::format("correct_links={}\ntruth_links={}\nmatched_links={}\n",
                     correct_link_count(seq.edge_ids, truth.edge_ids), truth.size(), seq.size());
  return kExitOk;
}

int cmd_pipeline(const Options& o, std::ostream& out) {
  const auto net = load_network(o);
  const auto traj = load_traj(o);
  const auto truth = stage("truth", kExitInput, [&] { return parse_ground_truth(o.truth, net); });
  const auto settings = load_settings(o);
  if (traj.size() < 2) throw CliFailure{kExitDomain, "matching needs at least 2 trajectory points"};
  PipelineOptions popts;
  popts.timing_repetitions = o.reps;
  popts.eps_sweep = o.sweep;
  const auto res = stage("pipeline", kExitDomain, [&] {
    return run_pipeline(net, traj, truth, DbscanParams{o.eps, o.min_pts, o.metric()}, settings,
                        popts);
  });
  const auto dir = ensure_dir(o.out_dir);
  stage("report", kExitInput, [&] {
    export_report(res.report, dir);
    return 0;
  });
  write_match_files(dir, "raw_", res.raw_match);
  write_match_files(dir, "reduced_", res.reduced_match);
  auto rd = create(dir / "reduced.csv");
  write_trajectory(rd, res.reduced.trajectory);
  auto sp = create(dir / "staypoints.csv");
  write_stay_points(sp, res.stay_points);

  const auto& r = res.report;
  out << fmt::format("clusters={} noise={} output_size={}\n", r.clustering.clusters,
                     r.clustering.noise, r.clustering.output_size);
  out << fmt::format("accuracy: raw={} reduced={} of {} (delta {})\n", r.raw.correct_links,
                     r.reduced.correct_links, r.raw.total_truth_links, r.accuracy_delta);
  out << fmt::format("time_reduction_pct={:.2f}\n", r.time_reduction_pct);
  out << fmt::format("volume_reduction_pct={:.2f}\n", r.volume_reduction_pct);
  out << fmt::format("speed_gain_pct={:.2f}\n", r.speed_gain_pct);
  return kExitOk;
}

int cmd_synth(const Options& o, std::ostream& out) {
  ScenarioSpec spec;
  spec.seed = o.seed;
  spec.road_count = o.roads;
  spec.route_edges = o.route_edges;
  spec.speed_mps = o.speed;
  spec.move_sigma_m = o.move_sigma;
  for (const auto& d : o.dwells) spec.dwells.push_back(parse_dwell(d));
  const auto sc = stage("synth", kExitDomain, [&] { return generate_scenario(spec); });
  const auto dir = ensure_dir(o.out_dir);
  auto nf = create(dir / "network.csv");
  write_road_network(nf, sc.network);
  auto tf = create(dir / "trajectory.csv");
  write_trajectory(tf, sc.trajectory);
  auto gf = create(dir / "truth.txt");
  for (const auto& id : sc.truth.edge_ids) gf << id << '\n';
  auto df = create(dir / "dwells.csv");
  df << "start_s,duration_s,sigma_m,center_lat,center_lon,first_record,record_count\n";
  for (const auto& d : sc.dwells) {
    df << format_double(d.spec.start_s) << ',' << format_double(d.spec.duration_s) << ','
       << format_double(d.spec.sigma_m) << ',' << format_double(d.center.lat) << ','
       << format_double(d.center.lon) << ',' << d.first_record << ',' << d.record_count << '\n';
  }
  out << fmt::format("edges={}\npoints={}\nroute_edges={}\n", sc.network.size(),
                     sc.trajectory.size(), sc.truth.size());
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stay-point reduction and fuzzy-logic map-matching for GPS trajectories", "spmm"};
  app.require_subcommand(1);
  Options o;

  auto add_traj = [&](CLI::App* sc) {
    sc->add_option("--traj", o.traj, "Trajectory file")->required();
    sc->add_option("--traj-format", o.traj_format, "Trajectory layout")
        ->check(CLI::IsMember({"native", "benchmark"}))
        ->capture_default_str();
  };
  auto add_network = [&](CLI::App* sc) {
    sc->add_option("--network", o.network, "Road network file")->required();
    sc->add_option("--network-format", o.network_format, "Road network layout")
        ->check(CLI::IsMember({"native", "benchmark"}))
        ->capture_default_str();
  };
  auto add_metric = [&](CLI::App* sc) {
    sc->add_option("--metric", o.metric_name, "Distance space for eps and k-NN")
        ->check(CLI::IsMember({"degree", "meter"}))
        ->capture_default_str();
  };
  auto add_dbscan = [&](CLI::App* sc) {
    sc->add_option("--eps", o.eps, "DBSCAN radius (degrees unless --metric meter)")
        ->required()
        ->check(CLI::PositiveNumber);
    sc->add_option("--min-pts", o.min_pts, "DBSCAN minimum neighborhood size, self included")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    add_metric(sc);
  };
  auto add_config = [&](CLI::App* sc) {
    sc->add_option("--config", o.config,
                   "Matcher settings JSON (repo default rule base and thresholds when omitted)");
  };

  auto* knn = app.add_subcommand("knn-curve", "Sorted k-th nearest neighbor distances");
  add_traj(knn);
  knn->add_option("--k", o.k, "Neighbor rank")->required()->check(CLI::PositiveNumber);
  knn->add_option("--out", o.out, "Output CSV")->required();
  add_metric(knn);

  auto* sp = app.add_subcommand("staypoints", "Cluster stay points and write the reduced trajectory");
  add_traj(sp);
  add_dbscan(sp);
  sp->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* red = app.add_subcommand("reduce", "Write only the reduced trajectory");
  add_traj(red);
  add_dbscan(red);
  red->add_option("--out", o.out, "Output CSV")->required();

  auto* match = app.add_subcommand("match", "Map-match a trajectory");
  add_network(match);
  add_traj(match);
  add_config(match);
  match->add_option("--out-dir", o.out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Count correct links of an edge sequence");
  add_network(eval);
  eval->add_option("--truth", o.truth, "Ground-truth route")->required();
  eval->add_option("--edges", o.edges, "Matched edge sequence, one id per line")->required();

  auto* pipe = app.add_subcommand("pipeline", "Raw vs reduced matching comparison");
  add_network(pipe);
  add_traj(pipe);
  pipe->add_option("--truth", o.truth, "Ground-truth route")->required();
  add_dbscan(pipe);
  add_config(pipe);
  pipe->add_option("--out-dir", o.out_dir, "Output directory")->required();
  pipe->add_option("--reps", o.reps, "Timing repetitions (repo default)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipe->add_option("--sweep", o.sweep, "Extra eps values summarized in eps_sweep.csv")
      ->delimiter(',');

  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario");
  synth->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  synth->add_option("--roads", o.roads, "Minimum number of grid edges (repo default)")
      ->capture_default_str();
  synth->add_option("--route-edges", o.route_edges, "Route length in edges (repo default)")
      ->capture_default_str();
  synth->add_option("--speed", o.speed, "Travel speed m/s (repo default)")->capture_default_str();
  synth->add_option("--move-sigma", o.move_sigma, "Jitter while moving, meters (repo default)")
      ->capture_default_str();
  synth->add_option("--dwell", o.dwells, "Dwell window start:duration:sigma (seconds, meters)");
  synth->add_option("--out-dir", o.out_dir, "Output directory")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    for (const auto& d : o.dwells) parse_dwell(d);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (knn->parsed()) return cmd_knn_curve(o, out);
    if (sp->parsed()) return cmd_staypoints(o, out);
    if (red->parsed()) return cmd_reduce(o, out);
    if (match->parsed()) return cmd_match(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (pipe->parsed()) return cmd_pipeline(o, out);
    if (synth->parsed()) return cmd_synth(o, out);
  } catch (const CliFailure& f) {
    err << "error: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace spmm
