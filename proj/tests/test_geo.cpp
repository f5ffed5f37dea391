#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "spmm/geo.hpp"
#include "spmm/spatial_index.hpp"

using namespace spmm;

namespace {

// Spherical law of cosines, independent of the haversine form.
double law_of_cosines(const GeoPoint& a, const GeoPoint& b) {
  const double p1 = a.lat * std::numbers::pi / 180, p2 = b.lat * std::numbers::pi / 180;
  const double dl = (b.lon - a.lon) * std::numbers::pi / 180;
  const double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return kEarthRadiusM * std::acos(std::clamp(c, -1.0, 1.0));
}

// Minimum over 1,001 evenly spaced points of the segment.
double sampled_segment_distance(const PlanarPoint& p, const Segment<double>& s) {
  double best = 1e300;
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    best = std::min(best, (p - (s.a + t * (s.b - s.a))).norm());
  }
  return best;
}

}  // namespace

TEST_CASE("project: identity and one-meter offsets") {
  const GeoPoint o{47.0, -122.0};
  const auto z = project(o, o);
  CHECK(z.x() == 0.0);
  CHECK(z.y() == 0.0);

  const GeoPoint north{47.0 + 1.0 / 111194.93, -122.0};
  const auto p = project(o, north);
  CHECK(p.x() == 0.0);
  CHECK(p.y() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(p.y() == doctest::Approx(haversine_distance(o, north)).epsilon(1e-3));

  const GeoPoint eq{0, 0}, east{0, 0.001};
  const auto q = project(eq, east);
  CHECK(q.y() == 0.0);
  CHECK(q.x() == doctest::Approx(111.19).epsilon(1e-4));
  CHECK(q.x() == doctest::Approx(haversine_distance(eq, east)).epsilon(1e-3));
}

TEST_CASE("project rejects invalid and distant coordinates") {
  CHECK_THROWS_AS(project({0, 0}, {91.0, 0}), InvalidCoordinate);
  CHECK_THROWS_AS(project({0, 0}, {0, 6.0}), InvalidCoordinate);
  CHECK_THROWS_AS(project({0, 0}, {std::nan(""), 0}), InvalidCoordinate);
}

TEST_CASE("project/unproject round trip within 1e-9 degrees") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat0(-70, 70), lon0(-179, 179), d(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint o{lat0(rng), lon0(rng)};
    const GeoPoint p{o.lat + d(rng), o.lon + d(rng)};
    const Projection proj(o);
    const auto back = proj.unproject(proj.project(p));
    REQUIRE(std::abs(back.lat - p.lat) < 1e-9);
    REQUIRE(std::abs(back.lon - p.lon) < 1e-9);
  }
}

TEST_CASE("haversine distance") {
  const GeoPoint x{12.5, 33.1};
  CHECK(haversine_distance(x, x) == 0.0);
  CHECK(haversine_distance({0, 0}, {0, 180}) ==
        doctest::Approx(std::numbers::pi * kEarthRadiusM).epsilon(1e-12));
  CHECK(haversine_distance({0, 0}, {0, 180}) == doctest::Approx(20015087).epsilon(1e-6));
  const GeoPoint a{47.6, -122.3}, b{47.7, -122.3};
  CHECK(haversine_distance(a, b) == doctest::Approx(law_of_cosines(a, b)).epsilon(0.005));
  CHECK(haversine_distance(a, b) == haversine_distance(b, a));
}

TEST_CASE("bearing") {
  CHECK(bearing<double>({0, 0}, {0, 1}) == 0.0);
  CHECK(bearing<double>({0, 0}, {1, 0}) == 90.0);
  CHECK(bearing<double>({0, 0}, {-1, -1}) == doctest::Approx(225.0));
  CHECK(bearing<double>({0, 0}, {-1, 0}) == doctest::Approx(270.0));
  CHECK_THROWS_AS(bearing<double>({3, 4}, {3, 4}), DomainError);
}

TEST_CASE("heading error") {
  CHECK(heading_error(42.0, 42.0) == 0.0);
  CHECK(heading_error(350.0, 10.0) == doctest::Approx(20.0));
  CHECK(heading_error(0.0, 180.0) == 180.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> h(0, 360);
  std::uniform_int_distribution<int> k(-3, 3);
  for (int i = 0; i < 1000; ++i) {
    const double a = h(rng), b = h(rng);
    const double e = heading_error(a, b);
    REQUIRE(e == heading_error(b, a));
    REQUIRE(e >= 0.0);
    REQUIRE(e <= 180.0);
    REQUIRE(heading_error(a + 360.0 * k(rng), b) == doctest::Approx(e).epsilon(1e-9));
  }
}

TEST_CASE("point-segment distance") {
  const Segment<double> s({0, 0}, {2, 0});
  auto on = point_segment_distance<double>({0.5, 0}, s);
  CHECK(on.distance == 0.0);
  CHECK(on.foot == PlanarPoint(0.5, 0));

  auto mid = point_segment_distance<double>({1, 1}, s);
  CHECK(mid.distance == doctest::Approx(1.0));
  CHECK(mid.foot == PlanarPoint(1, 0));
  CHECK(mid.t == doctest::Approx(0.5));

  auto clamp = point_segment_distance<double>({5, 1}, s);
  CHECK(clamp.distance == doctest::Approx(std::sqrt(10.0)));
  CHECK(clamp.foot == PlanarPoint(2, 0));
  CHECK(clamp.t == 1.0);

  CHECK_THROWS_AS(Segment<double>({1, 1}, {1, 1}), DomainError);
}

TEST_CASE("point-segment distance matches 1,001-sample brute force") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-50, 50);
  for (int i = 0; i < 1000; ++i) {
    const Segment<double> s({c(rng), c(rng)}, {c(rng), c(rng)});
    const PlanarPoint p(c(rng), c(rng));
    const auto got = point_segment_distance(p, s);
    const double sampled = sampled_segment_distance(p, s);
    // The exact minimum is never above the sampled one, and sampling at step
    // |s|/1000 overshoots by at most that much.
    REQUIRE(got.distance <= sampled + 1e-6);
    REQUIRE(sampled - got.distance <= s.length() / 1000.0 + 1e-6);
    REQUIRE((got.foot - p).norm() == doctest::Approx(got.distance));
  }
}

TEST_CASE("point-segment distance is exact where sampling hits the foot") {
  // Feet landing on sample positions t = i/1000 give a 1e-6 m match.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-50, 50);
  std::uniform_int_distribution<int> ti(0, 1000);
  std::uniform_real_distribution<double> off(-20, 20);
  for (int i = 0; i < 1000; ++i) {
    const Segment<double> s({c(rng), c(rng)}, {c(rng), c(rng)});
    const PlanarPoint dir = (s.b - s.a).normalized();
    const PlanarPoint normal(-dir.y(), dir.x());
    const double t = ti(rng) / 1000.0;
    const PlanarPoint p = s.a + t * (s.b - s.a) + off(rng) * normal;
    REQUIRE(std::abs(point_segment_distance(p, s).distance - sampled_segment_distance(p, s)) <
            1e-6);
  }
}

TEST_CASE("polyline projection") {
  const Polyline pl({{0, 0}, {2, 0}, {2, 2}});
  auto v = project_onto_polyline<double>({2, 0}, pl);
  CHECK(v.distance == 0.0);
  CHECK(v.arc_offset == doctest::Approx(2.0));

  // Equidistant from both segments: the lower segment index wins.
  auto tie = project_onto_polyline<double>({1, 1}, pl);
  CHECK(tie.distance == doctest::Approx(1.0));
  CHECK(tie.segment_index == 0);
  CHECK(tie.foot == PlanarPoint(1, 0));
  CHECK(tie.arc_offset == doctest::Approx(1.0));

  CHECK_THROWS_AS(Polyline({{0, 0}}), DomainError);
  CHECK_THROWS_AS(Polyline({{0, 0}, {0, 0}, {1, 1}}), DomainError);
}

TEST_CASE("polyline projection equals brute-force minimum over segments") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> c(-100, 100);
  std::uniform_int_distribution<int> nv(2, 8);
  for (int i = 0; i < 1000; ++i) {
    std::vector<PlanarPoint> vs;
    const int n = nv(rng);
    for (int k = 0; k < n; ++k) vs.emplace_back(c(rng), c(rng));
    const Polyline pl(vs);
    const PlanarPoint p(c(rng), c(rng));
    double best = 1e300;
    for (std::size_t s = 0; s < pl.segment_count(); ++s) {
      best = std::min(best, point_segment_distance(p, pl.segment(s)).distance);
    }
    const auto got = project_onto_polyline(p, pl);
    REQUIRE(got.distance == best);
    REQUIRE((point_at_offset(pl, got.arc_offset) - got.foot).norm() < 1e-6);
  }
}

TEST_CASE("spatial index") {
  SUBCASE("empty index") {
    const auto idx = SpatialIndex::build({});
    CHECK(idx.query({0, 0}, 10).empty());
  }
  SUBCASE("edge inside one cell") {
    std::vector<Polyline> e{Polyline({{10, 10}, {20, 20}})};
    const auto idx = SpatialIndex::build(e, 100);
    CHECK(idx.query({50, 50}, 1) == std::vector<std::size_t>{0});
  }
  SUBCASE("edge spanning three cells") {
    std::vector<Polyline> e{Polyline({{10, 10}, {290, 10}})};
    const auto idx = SpatialIndex::build(e, 100);
    for (double x : {50.0, 150.0, 250.0}) CHECK(idx.query({x, 50}, 1).size() == 1);
    CHECK(idx.query({350, 50}, 1).empty());
  }
  CHECK_THROWS_AS(SpatialIndex::build({}, 0.0), DomainError);
}

TEST_CASE("spatial index query is a superset of the linear scan") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> c(-2000, 2000), step(-150, 150), rad(1, 120);
  for (int trial = 0; trial < 1000; ++trial) {
    // 500 random edges once every 100 trials keeps the suite fast.
    static std::vector<Polyline> edges;
    static SpatialIndex idx;
    if (trial % 100 == 0) {
      edges.clear();
      for (int e = 0; e < 500; ++e) {
        PlanarPoint a(c(rng), c(rng));
        PlanarPoint b = a + PlanarPoint(step(rng), step(rng));
        if (a == b) b.x() += 1;
        edges.emplace_back(std::vector<PlanarPoint>{a, b});
      }
      idx = SpatialIndex::build(edges, 100);
    }
    const PlanarPoint p(c(rng), c(rng));
    const double r = rad(rng);
    const auto got = idx.query(p, r);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (project_onto_polyline(p, edges[e]).distance <= r) {
        REQUIRE(std::binary_search(got.begin(), got.end(), e));
      }
    }
  }
}

TEST_CASE("point grid radius and k-NN queries match brute force") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> c(0, 50);
  PointMatrix<double> pts(300, 2);
  for (int i = 0; i < 300; ++i) pts.row(i) << c(rng), c(rng);
  const PointGrid<double> grid(pts, 3.0);
  for (int i = 0; i < 300; i += 7) {
    std::vector<std::uint32_t> brute;
    std::vector<double> d;
    for (int j = 0; j < 300; ++j) {
      const double dist = (pts.row(i) - pts.row(j)).norm();
      if (dist <= 3.0) brute.push_back(static_cast<std::uint32_t>(j));
      if (j != i) d.push_back(dist);
    }
    CHECK(grid.within(i, 3.0) == brute);
    std::sort(d.begin(), d.end());
    for (std::size_t k : {1u, 3u, 10u}) CHECK(grid.kth_neighbor_distance(i, k) == d[k - 1]);
  }
}
