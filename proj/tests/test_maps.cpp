#include <algorithm>
#include <cmath>
#include <numbers>

#include "corona/maps.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corona;

namespace {

// Both coarse-map conditions checked pair by pair at a given A.
Index violations(const SampledMap& f, double A) {
  const auto& X = f.domain();
  const auto& Y = f.codomain();
  Index bad = 0;
  for (Index x = 0; x < X.size(); ++x) {
    if (Y.norm(f(x)) < X.norm(x) / A - A) ++bad;
    for (Index y = x + 1; y < X.size(); ++y)
      if (Y.distance(f(x), f(y)) > A * X.distance(x, y) + A) ++bad;
  }
  return bad;
}

SampledMap line_map(const SampledSpace& X, const SampledSpace& Y, double (*h)(double)) {
  return snap_map(X, Y, [&](Index x) { return Eigen::VectorXd::Constant(1, h(X.norm(x))); });
}

double twice(double x) { return 2 * x; }
double same(double x) { return x; }
double with_root(double x) { return x + std::sqrt(x); }
double zero(double) { return 0; }

Eigen::Matrix2d rotation(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

}  // namespace

TEST_CASE("coarse constant examples") {
  const auto X = build_halfline(256, 1);
  const auto Y = build_halfline(600, 1);
  const auto id = coarse_constant(identity_map(X));
  CHECK(id.A_lower == 1);
  CHECK(id.coarse);
  CHECK(id.violations_below == 0);

  const auto f = line_map(X, Y, twice);
  const auto r = coarse_constant(f);
  CHECK(r.A_lower <= 2);
  CHECK(r.coarse);
  CHECK(violations(f, r.A_lower) == 0);
  CHECK(violations(f, r.A_lower - 1e-3) == r.violations_below);
  CHECK(r.violations_below > 0);

  const auto big = build_halfline(4096, 1);
  const auto c = coarse_constant(line_map(big, big, zero));
  CHECK_FALSE(c.coarse);
  CHECK(c.requirement_slope == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("property: coarse constant against the pair oracle") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto X = oracle::random_space(seed, 60);
    const auto Y = oracle::random_space(seed + 100, 60);
    std::vector<Index> a(static_cast<std::size_t>(X.size()));
    for (Index x = 0; x < X.size(); ++x) a[x] = static_cast<Index>(mix64(seed, x) % static_cast<std::uint64_t>(Y.size()));
    const SampledMap f(X, Y, a);
    const auto r = coarse_constant(f);
    CHECK(violations(f, r.A_lower) == 0);
    if (r.A_lower > 1) {
      CHECK(violations(f, r.A_lower - 1e-3) == r.violations_below);
      CHECK(r.violations_below > 0);
    }
  }
}

TEST_CASE("property: composition bound") {
  const auto X = build_halfline(120, 1);
  const auto Y = build_halfline(300, 1);
  const auto Z = build_halfline(700, 1);
  const auto f = line_map(X, Y, twice);
  const auto g = line_map(Y, Z, with_root);
  const double Af = coarse_constant(f).A_lower, Ag = coarse_constant(g).A_lower;
  const auto gf = compose(g, f);
  CHECK(violations(gf, Ag * Af + Ag + Af) == 0);
  CHECK(coarse_constant(gf).A_lower <= Ag * Af + Ag + Af);
  CHECK_THROWS_AS(compose(f, g), InputError);
}

TEST_CASE("closeness examples") {
  const auto X = build_halfline(4096, 1);
  const auto Y = build_halfline(8300, 1);
  const auto f = line_map(X, Y, same);
  const auto self = closeness(f, f);
  CHECK(self.sublinearly_close);
  for (double c : self.C_eps) CHECK(c == 0);

  const auto g = line_map(X, Y, with_root);
  const auto near = closeness(f, g);
  CHECK(near.sublinearly_close);
  for (std::size_t k = 0; k < near.eps.size(); ++k) {
    CHECK(near.C_eps[k] <= 1 / (4 * near.eps[k]) + 0.5);
    if (k > 0) CHECK(near.C_eps[k] >= near.C_eps[k - 1]);
  }

  const auto h = line_map(X, Y, twice);
  const auto far = closeness(f, h);
  CHECK_FALSE(far.sublinearly_close);
  CHECK(far.annulus_ratio.back() == doctest::Approx(1));

  const auto other = build_halfline(10, 1);
  CHECK_THROWS_AS(closeness(f, identity_map(other)), InputError);
}

TEST_CASE("property: closeness is symmetric and adds along chains") {
  const auto X = build_halfline(1024, 1);
  const auto Y = build_halfline(2200, 1);
  const auto f = line_map(X, Y, same);
  const auto g = line_map(X, Y, with_root);
  const auto h = snap_map(X, Y, [&](Index x) {
    return Eigen::VectorXd::Constant(1, X.norm(x) + 2 * std::sqrt(X.norm(x)) + 3);
  });
  const auto fg = closeness(f, g), gf = closeness(g, f);
  CHECK(fg.annulus_ratio == gf.annulus_ratio);
  CHECK(fg.C_eps == gf.C_eps);
  const auto gh = closeness(g, h), fh = closeness(f, h);
  for (std::size_t k = 0; k < fh.annulus_ratio.size(); ++k)
    CHECK(fh.annulus_ratio[k] <= fg.annulus_ratio[k] + gh.annulus_ratio[k] + 1e-12);
}

TEST_CASE("pullbacks of Higson functions along close maps") {
  const auto X = build_halfline(4096, 1);
  const auto Y = build_halfline(8300, 1);
  const auto f = line_map(X, Y, same);
  const auto g = line_map(X, Y, with_root);
  const auto phi = SampledFunction::tabulate(Y, [&](Index y) { return std::sin(std::log1p(Y.norm(y))); });
  const auto diff = pullback(phi, f) - pullback(phi, g);
  std::vector<double> sups;
  for (const auto& [k, members] : X.annuli()) {
    if (k < 2) continue;
    double s = 0;
    for (Index x : members) s = std::max(s, std::abs(diff(x)));
    sups.push_back(s);
  }
  // cos(log x) oscillates, so compare halves rather than neighbours.
  const auto mid = sups.begin() + static_cast<std::ptrdiff_t>(sups.size() / 2);
  CHECK(*std::max_element(mid, sups.end()) < *std::max_element(sups.begin(), mid));
  CHECK(sups.back() < 0.1 * sups.front());
}

TEST_CASE("separating witness") {
  const auto X = build_halfline(1024, 1);
  const auto Y = build_halfline(2200, 1);
  const auto f = line_map(X, Y, twice);
  const auto g = line_map(X, Y, same);
  const std::vector<Index> seq{1, 4, 16, 64, 256, 1024};
  const auto w = separating_witness(f, g, seq, 1);
  for (Index x : seq) {
    CHECK(w.phi(f(x)) == Complex(1.0));
    CHECK(w.phi(g(x)) == Complex(0.0));
  }
  CHECK(w.constants.size() == w.scales.size());
  CHECK(w.max_constant <= 8);
  CHECK_THROWS_AS(separating_witness(f, f, seq, 1), PreconditionError);

  const auto r = line_map(X, Y, with_root);
  const std::vector<Index> far{256, 1024};
  CHECK_THROWS_AS(separating_witness(r, g, far, 0.1), PreconditionError);
}

TEST_CASE("map serialization") {
  const auto X = build_halfline(20, 1);
  const auto Y = build_halfline(40, 1);
  const auto f = line_map(X, Y, twice);
  const auto back = map_from_json(to_json(f), X, Y);
  CHECK(back.assignment() == f.assignment());
  CHECK_THROWS_AS(map_from_json(to_json(f), Y, X), InputError);
}

TEST_CASE("GL+ path closed forms") {
  const auto id = glplus_path(Eigen::Matrix2d::Identity(), 16);
  for (const auto& m : id.theta) CHECK((m - Eigen::Matrix2d::Identity()).norm() <= 1e-15);

  const auto twoI = glplus_path(Eigen::Matrix2d(2 * Eigen::Matrix2d::Identity()), 64);
  for (std::size_t k = 0; k < twoI.t.size(); ++k) {
    const double s = std::pow(2.0, 1 - twoI.t[k]);
    CHECK((twoI.theta[k] - s * Eigen::MatrixXd::Identity(2, 2)).norm() <= 1e-12);
    CHECK(twoI.determinants[k] == doctest::Approx(std::pow(4.0, 1 - twoI.t[k])));
  }

  const auto quarter = glplus_path(rotation(std::numbers::pi / 2), 64);
  for (std::size_t k = 0; k < quarter.t.size(); ++k) {
    CHECK((quarter.theta[k] - rotation((1 - quarter.t[k]) * std::numbers::pi / 2)).norm() <= 1e-12);
    CHECK(quarter.determinants[k] == doctest::Approx(1));
  }
  CHECK(quarter.endpoints_exact);

  const auto half = glplus_path(Eigen::Matrix2d(-Eigen::Matrix2d::Identity()), 9);
  CHECK(half.determinants_positive);
  const double off = std::min((half.theta[4] - rotation(std::numbers::pi / 2)).norm(),
                              (half.theta[4] - rotation(-std::numbers::pi / 2)).norm());
  CHECK(off <= 1e-12);

  Eigen::Matrix2d flip;
  flip << 0, 1, 1, 0;
  CHECK_THROWS_AS(glplus_path(flip, 8), PreconditionError);
  CHECK_THROWS_AS(glplus_path(Eigen::MatrixXd::Identity(5, 5), 8), PreconditionError);
}

TEST_CASE("property: GL+ paths on random matrices") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int n = 1 + static_cast<int>(seed % 4);
    Eigen::MatrixXd T(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) T(i, j) = 4 * unit_interval(mix64(seed, i * 7 + j)) - 2;
    if (T.determinant() < 0) T.row(0) *= -1;
    if (std::abs(T.determinant()) < 1e-3) continue;
    const auto path = glplus_path(T, 64);
    CHECK(path.determinants_positive);
    CHECK(path.endpoints_exact);
    CHECK(path.max_step <= path.speed_bound / 63 * (1 + 1e-6) + 1e-9);
  }
}

TEST_CASE("cone homotopy on a small plane sample") {
  const ConeSpace cone(build_interval(0.25), build_euclidean_grid(2, 16, 12, 0, 2.0));
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  const auto Y = homotopy_codomain(I, 16);
  const auto same_map = cone_homotopy_check(I, cone, Y);
  CHECK(same_map.endpoints_ok);
  CHECK(same_map.coarse.coarse);
  CHECK(same_map.coarse.A_lower <= 1 + 2 * Y.mesh());

  const Eigen::MatrixXd T = 2 * I;
  const auto Y2 = homotopy_codomain(T, 16);
  const auto doubled = cone_homotopy_check(T, cone, Y2);
  CHECK(doubled.endpoints_ok);
  CHECK(doubled.coarse.A_lower <= 4);

  const ConeSpace wrong(build_sphere_graph(2, 1), build_euclidean_grid(2, 8, 6));
  CHECK_THROWS_AS(cone_homotopy_check(I, wrong, Y), PreconditionError);
}

TEST_CASE("equivalence witness on a small cone") {
  EquivalenceSpec spec;
  spec.radius = 32;
  spec.sphere_mesh = 0.2;
  const auto w = equivalence_witness_Rn(spec);
  CHECK(w.f_report.coarse);
  CHECK(w.g_report.coarse);
  CHECK(w.f_report.A_lower <= 3);
  CHECK(w.g_report.A_lower <= 3);
  CHECK(w.fg_excess <= 0);
  CHECK(w.gf_excess <= 0);
  CHECK(w.gf_base_displacement <= w.p_diameter + 1e-12);
  CHECK(w.gf_report.annulus_ratio.back() < w.gf_report.annulus_ratio.front());
}
