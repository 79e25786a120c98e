#include "corona/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace corona {

namespace {

struct Modulus {
  double value = 0;
  std::pair<Index, Index> pair{-1, -1};
};

Modulus slice_modulus(const std::vector<SampledFunction>& slices, const CompactGraph& P,
                      const std::vector<Index>& points) {
  Modulus m;
  const Index np = static_cast<Index>(slices.size());
  for (Index p = 0; p < np; ++p) {
    for (Index q = p + 1; q < np; ++q) {
      double sup = 0;
      for (Index x : points) sup = std::max(sup, std::abs(slices[p](x) - slices[q](x)));
      const double v = sup / P.distance(p, q);
      if (v > m.value) m = {v, {p, q}};
    }
  }
  return m;
}

void check_slice(const SampledFunction& f, const std::string& x_ref, Index size) {
  if (f.space_ref() != x_ref || f.size() != size) throw InputError("slices must share one X");
}

}  // namespace

FunctionFamily make_family(const CompactGraph& P, std::vector<SampledFunction> slices) {
  if (static_cast<Index>(slices.size()) != P.vertex_count()) {
    throw InputError("need one slice per vertex of P");
  }
  FunctionFamily fam;
  fam.p_ref = P.ref();
  fam.x_ref = slices.front().space_ref();
  for (const auto& s : slices) check_slice(s, fam.x_ref, slices.front().size());
  std::vector<Index> all(static_cast<std::size_t>(slices.front().size()));
  for (Index x = 0; x < static_cast<Index>(all.size()); ++x) all[x] = x;
  const auto m = slice_modulus(slices, P, all);
  fam.modulus = m.value;
  fam.modulus_pair = m.pair;
  fam.slices = std::move(slices);
  return fam;
}

double family_modulus(const FunctionFamily& family, const CompactGraph& P, const SampledSpace& X,
                      double shell) {
  return slice_modulus(family.slices, P, X.outside_ball(shell)).value;
}

LambdaReport lambda(const SampledFunction& phi, const ConeSpace& cone) {
  if (phi.space_ref() != cone.ref() || phi.size() != cone.size()) {
    throw InputError("lambda needs a function on the cone");
  }
  const Index np = cone.p_space().vertex_count();
  const Index nx = cone.x_space().size();
  std::vector<SampledFunction> slices;
  for (Index p = 0; p < np; ++p) {
    slices.emplace_back(cone.x_space().ref(), phi.values().segment(p * nx, nx));
  }
  LambdaReport rep;
  rep.family = make_family(cone.p_space(), std::move(slices));
  rep.shell_modulus = family_modulus(rep.family, cone.p_space(), cone.x_space(), 1.0);
  rep.C_unit = sublinear_higson_constant(phi, cone, 1.0).value;
  rep.C_global = global_higson_constant(phi, cone).value;
  rep.margin = rep.C_global - rep.shell_modulus;
  rep.pass = rep.shell_modulus <= rep.C_global * (1 + 1e-12);
  rep.unit_scale_pass = rep.shell_modulus <= rep.C_unit * (1 + 1e-12);
  return rep;
}

SampledFunction omega(const SampledFunction& phi, const SampledFunction& psi, const ConeSpace& cone) {
  const Index np = cone.p_space().vertex_count();
  const Index nx = cone.x_space().size();
  if (phi.size() != np || psi.size() != nx || psi.space_ref() != cone.x_space().ref()) {
    throw InputError("omega factors do not match the cone");
  }
  Eigen::VectorXcd v(np * nx);
  for (Index p = 0; p < np; ++p) v.segment(p * nx, nx) = phi(p) * psi.values();
  return SampledFunction(cone.ref(), std::move(v));
}

OmegaReport omega_bound_check(const SampledFunction& phi, const SampledFunction& psi,
                              const ConeSpace& cone, const SampledSpace& phi_space,
                              std::span<const double> scales, double relative_tolerance) {
  if (phi_space.size() != cone.p_space().vertex_count()) {
    throw InputError("phi space is not the cone's P");
  }
  OmegaReport rep;
  rep.C_phi = lipschitz_constant(phi, phi_space).value;
  rep.psi_norm = psi.sup_norm();
  rep.phi_norm = phi.sup_norm();
  const auto prod = omega(phi, psi, cone);
  const ConeXNormView view(cone);
  const auto measured = sublinear_higson_profile(prod, view, scales);
  const auto cpsi = sublinear_higson_profile(psi, cone.x_space(), scales);
  for (std::size_t k = 0; k < scales.size(); ++k) {
    OmegaRow row;
    row.R = scales[k];
    row.measured = measured[k].value;
    row.bound = rep.C_phi * rep.psi_norm + cpsi[k].value * rep.phi_norm;
    row.margin = (1 + relative_tolerance) * row.bound - row.measured;
    row.pass = row.margin >= 0;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

RoundtripReport roundtrip(std::span<const std::pair<SampledFunction, SampledFunction>> terms,
                          const ConeSpace& cone) {
  if (terms.empty()) throw InputError("roundtrip needs at least one term");
  RoundtripReport rep;
  rep.terms = static_cast<Index>(terms.size());
  SampledFunction sum = omega(terms[0].first, terms[0].second, cone);
  for (std::size_t i = 1; i < terms.size(); ++i) sum = sum + omega(terms[i].first, terms[i].second, cone);
  const Index np = cone.p_space().vertex_count();
  const Index nx = cone.x_space().size();
  std::vector<SampledFunction> slices;
  for (Index p = 0; p < np; ++p) slices.emplace_back(cone.x_space().ref(), sum.values().segment(p * nx, nx));
  for (Index p = 0; p < np; ++p) {
    for (Index x = 0; x < nx; ++x) {
      Complex direct = 0;
      for (const auto& [phi, psi] : terms) direct += phi(p) * psi(x);
      rep.residual = std::max(rep.residual, std::abs(slices[p](x) - direct));
    }
  }
  rep.pass = rep.residual <= 1e-12;
  return rep;
}

PsiApproxReport psi_approx(const FunctionFamily& family, const CompactGraph& P, int n) {
  if (n < 1) throw InputError("n must be positive");
  if (family.p_ref != P.ref() || static_cast<Index>(family.slices.size()) != P.vertex_count()) {
    throw InputError("family does not live on this P");
  }
  PsiApproxReport rep;
  rep.n = n;
  rep.r = 1.0 / (4.0 * n);
  const auto space = space_from_graph(P);
  CoverData cover;
  try {
    cover = greedy_net_cover(space, rep.r);
  } catch (const PreconditionError& e) {
    throw ConstructionError(std::string("P is too coarse for 1/n members: ") + e.what());
  }
  const auto pou = hat_partition(cover, space);
  rep.anchors = cover.anchors;
  const Index nx = family.slices.front().size();
  std::vector<SampledFunction> approx;
  for (Index p = 0; p < P.vertex_count(); ++p) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(nx);
    for (const auto& t : pou.terms[p]) v += t.value * family.slices[cover.anchors[t.member]].values();
    approx.emplace_back(family.x_ref, std::move(v));
    rep.error = std::max(rep.error, sup_distance(approx.back(), family.slices[p]));
  }
  rep.approximant = make_family(P, std::move(approx));
  rep.bound = family.modulus / n;
  rep.pass = rep.error <= rep.bound;
  return rep;
}

Json to_json(const OmegaReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"R", row.R},
                    {"measured", row.measured},
                    {"bound", row.bound},
                    {"margin", row.margin},
                    {"pass", row.pass}});
  }
  return {{"C_phi", r.C_phi},
          {"psi_norm", r.psi_norm},
          {"phi_norm", r.phi_norm},
          {"rows", std::move(rows)},
          {"pass", r.pass}};
}

Json to_json(const LambdaReport& r) {
  return {{"modulus", r.family.modulus},
          {"modulus_pair", {r.family.modulus_pair.first, r.family.modulus_pair.second}},
          {"shell_modulus", r.shell_modulus},
          {"C_unit", r.C_unit},
          {"C_global", r.C_global},
          {"margin", r.margin},
          {"pass", r.pass},
          {"unit_scale_pass", r.unit_scale_pass}};
}

}  // namespace corona
