#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "spmm/evalbench.hpp"

using namespace spmm;
namespace fs = std::filesystem;

namespace {

using Seq = std::vector<std::string>;

bool is_subsequence(const Seq& sub, const Seq& of) {
  std::size_t j = 0;
  for (const auto& x : of) {
    if (j < sub.size() && sub[j] == x) ++j;
  }
  return j == sub.size();
}

// Longest subsequence of `a` that also occurs in `b`, by enumeration.
std::size_t brute_lcs(const Seq& a, const Seq& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    Seq sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("spmm_test_evalbench_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_matches(const MatchResult& a, const MatchResult& b) {
  if (a.edge_sequence != b.edge_sequence || a.matched.size() != b.matched.size()) return false;
  for (std::size_t i = 0; i < a.matched.size(); ++i) {
    const auto& x = a.matched[i];
    const auto& y = b.matched[i];
    if (x.source_index != y.source_index || x.edge != y.edge || x.offset != y.offset ||
        x.likelihood != y.likelihood || x.phase != y.phase || x.confident != y.confident) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("correct link count") {
  CHECK(correct_link_count({"a", "b", "c", "d", "e"}, {"a", "b", "c", "d", "e"}) == 5);
  CHECK(correct_link_count({"a", "b"}, {"x", "y"}) == 0);
  CHECK(correct_link_count({"a", "x", "b", "d"}, {"a", "b", "c", "d"}) == 3);
  CHECK(brute_lcs({"a", "x", "b", "d"}, {"a", "b", "c", "d"}) == 3);
  CHECK(correct_link_count({}, {"a"}) == 0);
}

TEST_CASE("correct link count equals the enumeration oracle") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(0, 10), sym(0, 4);
  const Seq alphabet{"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 500; ++trial) {
    Seq a, b;
    for (int i = len(rng); i > 0; --i) a.push_back(alphabet[sym(rng)]);
    for (int i = len(rng); i > 0; --i) b.push_back(alphabet[sym(rng)]);
    const auto got = correct_link_count(a, b);
    REQUIRE(got == brute_lcs(a, b));
    REQUIRE(got <= std::min(a.size(), b.size()));
    REQUIRE(correct_link_count(a, a) == a.size());
  }
}

TEST_CASE("derived percentages recompute from the counts") {
  ComparisonReport r;
  r.raw = {120, 399, 7531, 2.5, 0};
  r.reduced = {120, 399, 5467, 2.2, 0};
  r.raw.per_point_time = 1e6 * r.raw.matching_wall_time / r.raw.input_points;
  r.reduced.per_point_time = 1e6 * r.reduced.matching_wall_time / r.reduced.input_points;
  finalize(r);
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::abs(b); };
  CHECK(close(r.volume_reduction_pct, 100.0 * (7531 - 5467) / 7531.0));
  CHECK(close(r.time_reduction_pct, 100.0 * (2.5 - 2.2) / 2.5));
  CHECK(close(r.speed_gain_pct, 100.0 * (r.raw.per_point_time - r.reduced.per_point_time) /
                                    r.raw.per_point_time));
  CHECK(r.accuracy_delta == 0);
  CHECK(r.volume_reduction_pct == doctest::Approx(27.41).epsilon(1e-3));
}

TEST_CASE("pipeline without clusters leaves the trajectory untouched") {
  ScenarioSpec spec;
  spec.seed = 3;
  const auto sc = generate_scenario(spec);
  const auto out = run_pipeline(sc.network, sc.trajectory, sc.truth,
                                {.eps = 1e-12, .min_pts = 3}, {}, {.timing_repetitions = 1});
  CHECK(out.labels.cluster_count == 0);
  CHECK(out.reduced.trajectory.records == sc.trajectory.records);
  CHECK(out.report.volume_reduction_pct == 0.0);
  CHECK(out.report.accuracy_delta == 0);
  CHECK(same_matches(out.raw_match, out.reduced_match));
}

TEST_CASE("report export round trip") {
  ScenarioSpec spec;
  spec.seed = 5;
  spec.dwells = {{20, 70, 1.5}};
  const auto sc = generate_scenario(spec);
  const auto out =
      run_pipeline(sc.network, sc.trajectory, sc.truth, {}, {},
                   {.timing_repetitions = 3, .eps_sweep = {0.00001, 0.00002, 0.00004}});
  const auto dir = scratch("report");
  export_report(out.report, dir);
  const auto back = read_report(dir / "report.json");
  CHECK(back == out.report);
  CHECK(back.raw.correct_links <= back.raw.total_truth_links);
  CHECK(back.reduced.correct_links <= back.reduced.total_truth_links);
  CHECK(back.reduced.input_points == back.clustering.output_size);
  CHECK(back.clustering.output_size == back.clustering.clusters + back.clustering.noise);

  std::istringstream sweep(slurp(dir / "eps_sweep.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(sweep, l);) lines.push_back(l);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "eps,clusters,noise,output_size");
  for (const char* f : {"timing.csv", "volume.csv", "speed.csv"}) CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "volume.csv") ==
        fmt::format("run,input_points\nraw,{}\nreduced,{}\n", sc.trajectory.size(),
                    out.reduced.trajectory.size()));
  fs::remove_all(dir);
  CHECK_THROWS_AS(read_report(dir / "report.json"), ParseError);
}

TEST_CASE("scenario generation is a pure function of the spec") {
  ScenarioSpec spec;
  spec.seed = 77;
  spec.dwells = {{10, 60, 3}};
  const auto a = generate_scenario(spec);
  const auto b = generate_scenario(spec);
  CHECK(a.trajectory.records == b.trajectory.records);
  CHECK(a.truth.edge_ids == b.truth.edge_ids);
  REQUIRE(a.network.size() == b.network.size());
  for (std::size_t h = 0; h < a.network.size(); ++h) {
    CHECK(a.network.edge(h).geo_vertices == b.network.edge(h).geo_vertices);
  }
  spec.seed = 78;
  CHECK(generate_scenario(spec).trajectory.records != a.trajectory.records);
  CHECK(a.network.size() >= spec.road_count);
  CHECK(a.truth.size() == spec.route_edges);
}

TEST_CASE("scenario fixes stay within the jitter bound of the route") {
  ScenarioSpec spec;
  spec.seed = 12;
  spec.move_sigma_m = 2;
  spec.dwells = {{50, 60, 3}};
  const auto sc = generate_scenario(spec);
  const auto& net = sc.network;
  for (const auto& r : sc.trajectory.records) {
    const auto p = net.projection().project(r.position);
    double best = 1e300;
    for (const auto& id : sc.truth.edge_ids) {
      best = std::min(best, project_onto_polyline(p, net.edge(net.handle_of(id)).geometry).distance);
    }
    // 3 sigma of the larger jitter plus projection mismatch between origins.
    REQUIRE(best <= 9.0 + 0.5);
  }
}

TEST_CASE("a 60 s dwell with sigma 3 m stays inside a 10 m disc") {
  ScenarioSpec spec;
  spec.seed = 21;
  spec.dwells = {{40, 60, 3}};
  const auto sc = generate_scenario(spec);
  REQUIRE(sc.dwells.size() == 1);
  const auto& d = sc.dwells[0];
  CHECK(d.record_count == 60);
  std::size_t inside = 0;
  for (const auto& r : sc.trajectory.records) inside += haversine_distance(r.position, d.center) <= 10.0;
  CHECK(inside >= 60);
}

TEST_CASE("no dwell windows: no threshold stay points at 20 m/s") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.speed_mps = 20;
    const auto sc = generate_scenario(spec);
    CHECK(threshold_staypoint_detect(sc.trajectory, 10.0, 60.0).empty());
  }
}

TEST_CASE("dwells: the reduced run is at least as accurate as the raw run") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioSpec spec;
    spec.seed = seed;
    spec.route_edges = 12;
    spec.dwells = {{30, 90, 1.5}, {200, 80, 1.5}};
    const auto sc = generate_scenario(spec);
    const auto out =
        run_pipeline(sc.network, sc.trajectory, sc.truth, {}, {}, {.timing_repetitions = 1});
    CHECK(out.report.accuracy_delta >= 0);
    CHECK(out.report.volume_reduction_pct > 0.0);
  }
}
