#include <cmath>
#include <numbers>

#include "corona/spaces.hpp"
#include "doctest.h"

using namespace corona;

TEST_CASE("half-line norms and balls") {
  const auto s = build_halfline(10, 1.0);
  CHECK(s.size() == 11);
  CHECK(s.norm(0) == 0);
  CHECK(s.norm(7) == 7);
  CHECK(s.distance(1, 3) == 2);
  CHECK(s.ball(3.5) == std::vector<Index>{0, 1, 2, 3});
  CHECK(s.ball(0) == std::vector<Index>{0});
  CHECK(s.ball(100).size() == 11);
  CHECK(s.is_line());
  CHECK_THROWS_AS(s.norm(11), InputError);
  CHECK_THROWS_AS(build_halfline(0, 1.0), DegenerateSpaceError);

  const auto half = build_halfline(10, 0.5);
  CHECK(half.norm(10) == 5);
  CHECK(build_halfline(4, 1).size() == 5);
  CHECK(validate_metric(s).passed);
}

TEST_CASE("euclidean grid contract") {
  const auto g = build_euclidean_grid(2, 64, 32);
  CHECK(g.norm(0) == 0);
  for (int k = 0; k <= 5; ++k) {
    REQUIRE(g.annuli().count(k) == 1);
    CHECK(g.annuli().at(k).size() >= 32);
  }
  // Distances follow the closed-form Euclidean formula.
  const auto& c = g.coordinates();
  for (Index i = 0; i < g.size(); i += 37) {
    for (Index j = 0; j < g.size(); j += 53) {
      const double dx = c(i, 0) - c(j, 0), dy = c(i, 1) - c(j, 1);
      CHECK(g.distance(i, j) == doctest::Approx(std::sqrt(dx * dx + dy * dy)).epsilon(1e-15));
    }
  }
  const Eigen::MatrixXd p = (Eigen::MatrixXd(2, 2) << 0, 0, 3, 4).finished();
  CHECK(build_point_cloud(p).norm(1) == 5);
  CHECK_THROWS_AS(build_euclidean_grid(5, 64, 32), InputError);
  CHECK_THROWS_AS(build_euclidean_grid(2, 64, 2), InputError);
}

TEST_CASE("builders are deterministic") {
  const auto a = build_euclidean_grid(3, 16, 20, 7);
  const auto b = build_euclidean_grid(3, 16, 20, 7);
  CHECK(a.coordinates() == b.coordinates());
  CHECK(a.ref() == b.ref());
  const auto c = build_euclidean_grid(3, 16, 20, 8);
  CHECK(a.ref() != c.ref());
}

TEST_CASE("compact graphs") {
  const auto iv = build_interval(0.25);
  CHECK(iv.vertex_count() == 5);
  CHECK(iv.distance(0, 4) == 1);
  CHECK(iv.diameter() == 1);

  const auto s1 = build_sphere_graph(2, std::numbers::pi / 16);
  const Index n = s1.vertex_count();
  const double antipode = s1.distance(0, n / 2);
  CHECK(antipode >= std::numbers::pi - 0.2);
  CHECK(antipode <= std::numbers::pi + 1e-12);
  CHECK(s1.is_cyclic());

  // S^2: graph distance approximates the great-circle distance from above.
  const auto s2 = build_sphere_graph(3, 0.2);
  CHECK(std::abs(s2.diameter() - std::numbers::pi) <= 0.2);
  const auto& xyz = s2.coordinates();
  double worst = 0;
  for (Index v = 0; v < s2.vertex_count(); ++v) {
    const Eigen::Vector3d a = xyz.row(0), b = xyz.row(v);
    const double geodesic = std::atan2(a.cross(b).norm(), a.dot(b));
    CHECK(s2.distance(0, v) >= geodesic - 1e-12);
    worst = std::max(worst, s2.distance(0, v) - geodesic);
  }
  CHECK(worst <= 0.2 * std::numbers::pi);

  CHECK_THROWS_AS(build_interval(2.0), ConstructionError);
  CHECK_THROWS_AS(build_sphere_graph(2, 4.0), ConstructionError);
  CHECK(build_point_graph().vertex_count() == 1);
  CHECK(validate_metric(space_from_graph(s1)).passed);
}

TEST_CASE("quasi-geodesic check") {
  CHECK(quasi_geodesic_check(build_halfline(40, 1), 1, 10000).passed);
  const auto g = build_euclidean_grid(2, 32, 32);
  const auto rep = quasi_geodesic_check(g, 2, 400, 3);
  CHECK(rep.passed);
  CHECK(rep.pairs_checked == 400);

  Eigen::MatrixXd two(6, 1);
  two << 0, 1, 2, 100, 101, 102;
  const auto clusters = build_point_cloud(two, 0, 2);
  const auto bad = quasi_geodesic_check(clusters, 2, 1000);
  CHECK_FALSE(bad.passed);
  CHECK(bad.disconnected);
  CHECK(bad.witness.first <= 2);
  CHECK(bad.witness.second >= 3);
}

TEST_CASE("property: norm is 1-Lipschitz and balls are monotone") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 20 + static_cast<int>(mix64(seed) % 60);
    Eigen::MatrixXd pts(n, 2);
    pts.row(0).setZero();
    for (int i = 1; i < n; ++i)
      for (int a = 0; a < 2; ++a) pts(i, a) = 50 * (unit_interval(mix64(seed, 2 * i + a)) - 0.5);
    const auto s = build_point_cloud(pts);
    CHECK(validate_metric(s).passed);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) CHECK(std::abs(s.norm(i) - s.norm(j)) <= s.distance(i, j) + 1e-12);
    for (double r = 0; r < 40; r += 3.7) {
      const auto small = s.ball(r), large = s.ball(r + 2.1);
      CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
    }
  }
}

TEST_CASE("nearest index agrees with brute force") {
  const auto g = build_euclidean_grid(2, 16, 24);
  const NearestIndex index(g.coordinates(), 1.5);
  for (int t = 0; t < 200; ++t) {
    Eigen::Vector2d q(40 * (unit_interval(mix64(9, 2 * t)) - 0.5), 40 * (unit_interval(mix64(9, 2 * t + 1)) - 0.5));
    Index best = -1;
    double bd = kInf;
    for (Index i = 0; i < g.size(); ++i) {
      const double d = (g.coordinates().row(i).transpose() - q).norm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    const auto [id, d] = index.nearest(q);
    CHECK(id == best);
    CHECK(d == bd);
  }
}
