#include <algorithm>
#include <cmath>

#include "corona/smoothing.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corona;

namespace {

// Cover statistics straight from the definitions.
struct CoverStats {
  int N = 0;
  double d = 0;
  double L = kInf;
};

CoverStats brute_cover(const MetricSpace& s, const std::vector<Index>& centers, double r) {
  CoverStats st;
  auto in = [&](Index c, Index y) { return s.distance(c, y) < 2 * r; };
  for (Index x = 0; x < s.size(); ++x) {
    int count = 0;
    double best = 0;
    for (Index c : centers) {
      if (!in(c, x)) continue;
      ++count;
      double comp = kInf;
      for (Index y = 0; y < s.size(); ++y)
        if (!in(c, y)) comp = std::min(comp, s.distance(x, y));
      best = std::max(best, comp);
    }
    st.N = std::max(st.N, count);
    st.L = std::min(st.L, best);
  }
  for (Index c : centers)
    for (Index a = 0; a < s.size(); ++a)
      for (Index b = a + 1; b < s.size(); ++b)
        if (in(c, a) && in(c, b)) st.d = std::max(st.d, s.distance(a, b));
  return st;
}

}  // namespace

TEST_CASE("greedy cover on the half-line") {
  const auto s = build_halfline(64, 1);
  const auto cover = greedy_net_cover(s, 2);
  for (std::size_t a = 0; a < cover.anchors.size(); ++a) CHECK(cover.anchors[a] == 2 * static_cast<Index>(a));
  const auto st = brute_cover(s, cover.anchors, 2);
  CHECK(cover.degree_N == st.N);
  CHECK(cover.diameter_d == st.d);
  CHECK(cover.lebesgue_L == st.L);
  // Open balls of radius 4 around even centers: odd points see 4 centers.
  CHECK(cover.degree_N == 4);
  CHECK(cover.diameter_d <= 8);
  CHECK(cover.lebesgue_L >= 1);
  CHECK_THROWS_AS(greedy_net_cover(s, 1.5), PreconditionError);
}

TEST_CASE("single point cover") {
  const auto s = build_point_cloud(Eigen::MatrixXd::Zero(1, 2));
  const auto cover = greedy_net_cover(s, 2);
  CHECK(cover.anchors.size() == 1);
  CHECK(cover.degree_N == 1);
  CHECK(std::isinf(cover.lebesgue_L));
  const auto pou = hat_partition(cover, s);
  CHECK(pou.terms[0].size() == 1);
  CHECK(pou.terms[0][0].value == 1);
  CHECK(pou.lipschitz_D == 0);
}

TEST_CASE("planar cover degree") {
  const auto g = build_euclidean_grid(2, 24, 24);
  const auto cover = greedy_net_cover(g, 4);
  const auto st = brute_cover(g, cover.anchors, 4);
  CHECK(cover.degree_N == st.N);
  CHECK(cover.diameter_d == st.d);
  CHECK(cover.lebesgue_L == st.L);
  // Centers are r apart and within 2r of the point: disjoint r/2-balls in a
  // 2.5r-ball.
  CHECK(cover.degree_N <= 25);
  CHECK(cover.diameter_d <= 4 * 4);
}

TEST_CASE("hat partition") {
  const auto s = build_halfline(200, 1);
  const auto cover = greedy_net_cover(s, 2);
  const auto pou = hat_partition(cover, s);
  for (const auto& t : pou.terms) {
    double sum = 0;
    for (const auto& term : t) {
      CHECK(term.value >= 0);
      CHECK(term.value <= 1);
      sum += term.value;
    }
    CHECK(std::abs(sum - 1) <= 1e-9);
  }
  // Brute-force D over all pairs and members.
  double D = 0;
  for (Index x = 0; x < s.size(); ++x)
    for (Index y = x + 1; y < s.size(); ++y)
      for (std::size_t a = 0; a < cover.anchors.size(); ++a) {
        auto value = [&](Index p) {
          for (const auto& t : pou.terms[p])
            if (t.member == static_cast<Index>(a)) return t.value;
          return 0.0;
        };
        D = std::max(D, std::abs(value(x) - value(y)) / s.distance(x, y));
      }
  CHECK(pou.lipschitz_D == D);
  CHECK(pou.lipschitz_D <= 2.0 / cover.r + 1e-12);
  CHECK(pou.lipschitz_D <= pou.documented_bound);
}

TEST_CASE("smoothing properties") {
  const auto s = build_halfline(300, 1);
  const auto cover = greedy_net_cover(s, 2);
  const auto pou = hat_partition(cover, s);
  const auto c = SampledFunction::constant(s, Complex(2, -1));
  CHECK(smooth(c, pou, cover).values() == c.values());

  const auto lin = SampledFunction::tabulate(s, [&](Index x) { return 0.5 * s.norm(x); });
  const auto g = smooth(lin, pou, cover);
  for (Index x = 0; x < s.size(); ++x) CHECK(std::abs(g(x) - lin(x)) <= cover.diameter_d * 0.5);

  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto f = oracle::random_function(s, seed);
    const auto h = oracle::random_function(s, seed + 11);
    CHECK(smooth(f, pou, cover).sup_norm() <= f.sup_norm() * (1 + 1e-12));
    const Complex a(0.7, 0.2), b(-1.3, 0);
    const auto lhs = smooth(a * f + b * h, pou, cover);
    const auto rhs = a * smooth(f, pou, cover) + b * smooth(h, pou, cover);
    CHECK(sup_distance(lhs, rhs) <= 1e-9);
  }
}

TEST_CASE("B_hL constant examples") {
  const auto s = build_halfline(2048, 1);
  const auto phi = SampledFunction::tabulate(s, [&](Index x) { return s.norm(x) / (1 + s.norm(x)); });
  const auto f = phi + hash_noise(s, 3, 8);
  const auto scales = dyadic_scales(1, 10);
  const auto hig = sublinear_higson_profile(phi, s, scales);
  const auto bhl = b_hl_profile(f, s, scales);
  for (std::size_t k = 0; k < scales.size(); ++k) {
    CHECK(b_hl_constant(phi, s, scales[k]).value <= hig[k].value);
    CHECK(bhl[k].value <= hig[k].value + 16);
  }
  // A unit step that never decays: the constant grows linearly.
  const auto step = SampledFunction::tabulate(s, [](Index x) { return x % 2 == 0 ? 1.0 : 0.0; });
  const auto grow = b_hl_profile(step, s, scales);
  for (std::size_t k = 0; k < scales.size(); ++k) CHECK(grow[k].value == doctest::Approx(scales[k] / 2));
}

TEST_CASE("smoothing bound on the noise pipeline") {
  const auto s = build_halfline(2048, 1);
  const auto cover = greedy_net_cover(s, 2);
  const auto pou = hat_partition(cover, s);
  const auto f = SampledFunction::tabulate(s, [&](Index x) { return s.norm(x) / (1 + s.norm(x)); }) +
                 hash_noise(s, 9, 8);
  const auto g = smooth(f, pou, cover);
  const auto rep = verify_appendix_bound(f, g, cover, pou, s, 1, dyadic_scales(1, 10));
  CHECK(rep.bound_pass);
  CHECK(rep.decay_pass);
  CHECK(rep.decay_slope <= -0.8);
  CHECK_FALSE(rep.skipped_scales.empty());
  for (const auto& row : rep.rows) CHECK(row.R > 2 * rep.d);

  // Sign noise of unit amplitude is not in B_hL: f - g does not decay.
  const auto bad = hash_noise(s, 9, 1e9);
  const auto gbad = smooth(bad, pou, cover);
  const auto brep = verify_appendix_bound(bad, gbad, cover, pou, s, 1, dyadic_scales(1, 10));
  CHECK_FALSE(brep.decay_pass);
  CHECK_FALSE(brep.passed());
}

TEST_CASE("truncation to compact support") {
  const auto s = build_halfline(1024, 1);
  const auto f = SampledFunction::tabulate(s, [&](Index x) { return 1.0 / (1 + s.norm(x)); });
  const auto scales = dyadic_scales(1, 8);
  CHECK(classical_higson_modulus(f, s, 2, 256).value < 0.1 * classical_higson_modulus(f, s, 2, 2).value);
  const auto t = c0_truncation(f, s, 0.01);
  CHECK(t.error <= 0.01);
  CHECK(t.proper);
  CHECK(sup_distance(f, t.truncated) == t.error);
  for (Index x = 0; x < s.size(); ++x)
    if (s.norm(x) > t.R) CHECK(t.truncated(x) == Complex(0.0));
}

TEST_CASE("cover and partition serialize") {
  const auto s = build_halfline(12, 1);
  const auto cover = greedy_net_cover(s, 2);
  const auto j = to_json(cover);
  CHECK(j.at("degree_N") == cover.degree_N);
  CHECK(j.at("anchors").size() == cover.anchors.size());
  const auto pj = to_json(hat_partition(cover, s));
  CHECK(pj.at("terms").size() == 13);
}
