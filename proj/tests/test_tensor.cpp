#include <cmath>
#include <numbers>

#include "corona/tensor.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corona;

namespace {

ConeOptions line_options() { return ConeOptions{{ConeAdjacency::Kind::consecutive, 8, 0}}; }

double angle(const CompactGraph& P, Index p) {
  return std::atan2(P.coordinates()(p, 1), P.coordinates()(p, 0));
}

}  // namespace

TEST_CASE("lambda slices") {
  const auto P = build_sphere_graph(2, 0.5);
  const auto X = build_halfline(24, 1);
  const ConeSpace cone(P, X, line_options());
  const auto PS = space_from_graph(P);
  const auto psi = SampledFunction::tabulate(X, [&](Index x) { return std::sin(std::log1p(X.norm(x))); });

  const auto flat = lambda(omega(SampledFunction::constant(PS, 1), psi, cone), cone);
  CHECK(flat.family.modulus == 0);
  for (const auto& s : flat.family.slices) CHECK(s.values() == psi.values());

  const auto phi = SampledFunction::tabulate(PS, [&](Index p) { return std::cos(angle(P, p)); });
  const auto prod = lambda(omega(phi, psi, cone), cone);
  CHECK(prod.family.modulus ==
        doctest::Approx(lipschitz_constant(phi, PS).value * psi.sup_norm()).epsilon(1e-12));
  CHECK(prod.pass);
  CHECK_THROWS_AS(lambda(psi, cone), InputError);
}

TEST_CASE("property: lambda is an isometric *-homomorphism") {
  const auto P = build_interval(0.25);
  const auto X = build_halfline(20, 1);
  const ConeSpace cone(P, X, line_options());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto a = SampledFunction::tabulate(cone, [&](Index v) {
      return Complex(std::sin(0.3 * v + seed), unit_interval(mix64(seed, v)) - 0.5);
    });
    const auto b = SampledFunction::tabulate(cone, [&](Index v) { return hash_sign(seed + 7, v) / (1.0 + v % 5); });
    const auto la = lambda(a, cone).family, lb = lambda(b, cone).family;
    const auto lab = lambda(a * b, cone).family;
    const auto lconj = lambda(conj(a), cone).family;
    double top = 0;
    for (std::size_t p = 0; p < la.slices.size(); ++p) {
      CHECK((la.slices[p] * lb.slices[p]).values() == lab.slices[p].values());
      CHECK(conj(la.slices[p]).values() == lconj.slices[p].values());
      top = std::max(top, la.slices[p].sup_norm());
    }
    CHECK(top == a.sup_norm());
  }
}

TEST_CASE("omega bounds") {
  const auto P = build_sphere_graph(2, 0.4);
  const auto X = build_halfline(48, 1);
  const ConeSpace cone(P, X, line_options());
  const auto PS = space_from_graph(P);
  const auto scales = dyadic_scales(0, 4);
  const auto psi = SampledFunction::tabulate(X, [&](Index x) { return X.norm(x) / (1 + X.norm(x)); });

  // phi = 1: the lifted psi is no worse on the cone than on X.
  const auto one = SampledFunction::constant(PS, 1);
  const auto lifted = omega(one, psi, cone);
  const ConeXNormView view(cone);
  const auto on_cone = sublinear_higson_profile(lifted, view, scales);
  const auto on_x = sublinear_higson_profile(psi, X, scales);
  for (std::size_t k = 0; k < scales.size(); ++k) CHECK(on_cone[k].value <= on_x[k].value + 1e-12);

  const auto phi = SampledFunction::tabulate(PS, [&](Index p) { return std::sin(angle(P, p)); });
  const auto constant_psi = SampledFunction::constant(X, 1);
  const auto rep = omega_bound_check(phi, constant_psi, cone, PS, scales);
  CHECK(rep.pass);
  for (const auto& row : rep.rows) CHECK(row.measured <= rep.C_phi * 1.1);

  const auto interval = build_interval(0.25);
  const ConeSpace icone(interval, X, line_options());
  const auto IS = space_from_graph(interval);
  const auto height = SampledFunction::tabulate(IS, [&](Index p) { return interval.coordinates()(p, 0); });
  const auto bump = bump_family(X, 2).bumps[1];
  CHECK(omega_bound_check(height, bump, icone, IS, scales).pass);
  CHECK_THROWS_AS(omega(psi, phi, cone), InputError);
}

TEST_CASE("product roundtrip") {
  const auto P = build_sphere_graph(2, 0.4);
  const auto X = build_halfline(32, 1);
  const ConeSpace cone(P, X, line_options());
  const auto PS = space_from_graph(P);
  std::vector<std::pair<SampledFunction, SampledFunction>> terms;
  for (int i = 1; i <= 3; ++i) {
    terms.emplace_back(SampledFunction::tabulate(PS, [&](Index p) { return std::cos(i * angle(P, p)); }),
                       SampledFunction::tabulate(X, [&](Index x) { return std::pow(1 + X.norm(x), -0.5 * i); }));
    const auto rep = roundtrip(std::span(terms), cone);
    CHECK(rep.pass);
    CHECK(rep.residual <= 1e-12);
  }
}

TEST_CASE("psi approximation") {
  const auto P = build_interval(1.0 / 256);
  const auto X = build_halfline(64, 1);
  const auto psi0 = SampledFunction::tabulate(X, [&](Index x) { return X.norm(x) / (1 + X.norm(x)); });
  auto family = [&](auto h) {
    std::vector<SampledFunction> slices;
    for (Index p = 0; p < P.vertex_count(); ++p) slices.push_back(Complex(h(P.coordinates()(p, 0))) * psi0);
    return make_family(P, std::move(slices));
  };
  const auto constant = family([](double) { return 1.0; });
  const auto linear = family([](double t) { return t; });
  const auto smooth = family([](double t) { return std::sin(std::numbers::pi * t / 2); });
  CHECK(linear.modulus == doctest::Approx(psi0.sup_norm()));

  double prev_lin = kInf, prev_smooth = kInf;
  for (int n : {4, 8, 16}) {
    CHECK(psi_approx(constant, P, n).error <= 1e-15);
    const auto lin = psi_approx(linear, P, n);
    CHECK(lin.pass);
    CHECK(lin.error <= linear.modulus / n);
    CHECK(lin.error <= prev_lin);
    const auto sm = psi_approx(smooth, P, n);
    CHECK(sm.pass);
    CHECK(sm.error <= prev_smooth);
    if (std::isfinite(prev_smooth)) CHECK(std::abs(sm.error / prev_smooth - 0.5) <= 0.05);
    prev_lin = lin.error;
    prev_smooth = sm.error;
  }
  CHECK_THROWS_AS(psi_approx(linear, P, 64), ConstructionError);
}

TEST_CASE("psi approximation of a non-product family") {
  const auto P = build_interval(1.0 / 128);
  const auto X = build_halfline(32, 1);
  const ConeSpace cone(P, X, line_options());
  const auto phi = SampledFunction::tabulate(cone, [&](Index v) {
    const double t = P.coordinates()(cone.p_of(v), 0);
    return std::sin(t * std::log1p(X.norm(cone.x_of(v))));
  });
  const auto fam = lambda(phi, cone).family;
  for (int n : {2, 4, 8}) {
    const auto rep = psi_approx(fam, P, n);
    CHECK(rep.pass);
    CHECK(rep.error <= fam.modulus / n);
  }
}
