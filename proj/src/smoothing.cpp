#include "corona/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace corona {

CoverData greedy_net_cover(const MetricSpace& space, double r) {
  if (!(r >= 2 * space.mesh())) {
    throw PreconditionError("cover radius must be at least twice the mesh");
  }
  const Index n = space.size();
  CoverData cover;
  cover.r = r;
  const auto near = radius_neighbors(space, 2 * r);
  std::vector<char> center(static_cast<std::size_t>(n), 0);
  for (Index x = 0; x < n; ++x) {
    bool free = true;
    for (Index y : near[x]) {
      if (center[y] && space.distance(x, y) < r) {
        free = false;
        break;
      }
    }
    if (free) {
      center[x] = 1;
      cover.anchors.push_back(x);
    }
  }
  cover.membership.assign(static_cast<std::size_t>(n), {});
  for (std::size_t a = 0; a < cover.anchors.size(); ++a) {
    const Index c = cover.anchors[a];
    std::vector<Index> m;
    for (Index y : near[c])
      if (space.distance(c, y) < 2 * r) m.push_back(y);
    for (Index y : m) cover.membership[y].push_back(static_cast<Index>(a));
    cover.members.push_back(std::move(m));
  }
  for (const auto& m : cover.membership) cover.degree_N = std::max<int>(cover.degree_N, static_cast<int>(m.size()));

  for (const auto& m : cover.members)
    for (std::size_t i = 0; i < m.size(); ++i)
      for (std::size_t j = i + 1; j < m.size(); ++j)
        cover.diameter_d = std::max(cover.diameter_d, space.distance(m[i], m[j]));

  // Lebesgue number: min over x of max over members U containing x of
  // d(x, X \ U).
  std::vector<double> per_point(static_cast<std::size_t>(n), kInf);
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  parallel_chunks(n, [&](Index begin, Index end, int) {
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Index x = begin; x < end; ++x) {
      space.distances(x, all, row);
      double best = 0;
      for (Index a : cover.membership[x]) {
        double to_complement = kInf;
        for (Index y = 0; y < n; ++y) {
          const auto& my = cover.membership[y];
          if (!std::binary_search(my.begin(), my.end(), a)) to_complement = std::min(to_complement, row[y]);
        }
        best = std::max(best, to_complement);
      }
      per_point[x] = best;
    }
  });
  cover.lebesgue_L = *std::min_element(per_point.begin(), per_point.end());
  return cover;
}

PartitionOfUnity hat_partition(const CoverData& cover, const MetricSpace& space) {
  const Index n = space.size();
  if (static_cast<Index>(cover.membership.size()) != n) {
    throw InputError("cover does not belong to this space");
  }
  PartitionOfUnity pou;
  pou.terms.assign(static_cast<std::size_t>(n), {});
  pou.min_total = kInf;
  const double width = 2 * cover.r;
  for (Index x = 0; x < n; ++x) {
    double total = 0;
    for (Index a : cover.membership[x]) {
      const double tau = std::max(0.0, 1.0 - space.distance(x, cover.anchors[a]) / width);
      pou.terms[x].push_back({a, tau});
      total += tau;
    }
    if (!(total > 0)) {
      throw ConstructionError("cover hole at point " + std::to_string(x));
    }
    for (auto& t : pou.terms[x]) t.value /= total;
    pou.min_total = std::min(pou.min_total, total);
  }
  pou.documented_bound = (2.0 * cover.degree_N + 1) / (width * pou.min_total);

  // D: sup over pairs and members of |pi_a(x) - pi_a(x')| / d(x, x').
  auto pair_value = [&](Index x, Index y, double d, Index& member) {
    const auto& tx = pou.terms[x];
    const auto& ty = pou.terms[y];
    double best = -1;
    std::size_t i = 0, j = 0;
    while (i < tx.size() || j < ty.size()) {
      Index a;
      double vx = 0, vy = 0;
      if (j == ty.size() || (i < tx.size() && tx[i].member < ty[j].member)) {
        a = tx[i].member;
        vx = tx[i++].value;
      } else if (i == tx.size() || ty[j].member < tx[i].member) {
        a = ty[j].member;
        vy = ty[j++].value;
      } else {
        a = tx[i].member;
        vx = tx[i++].value;
        vy = ty[j++].value;
      }
      const double v = std::abs(vx - vy) / d;
      if (v > best) {
        best = v;
        member = a;
      }
    }
    return best;
  };
  struct Local {
    double v = -1;
    Index x = -1, y = -1, a = -1;
  };
  const int chunks = std::max(1, chunk_count(n));
  std::vector<Local> local(static_cast<std::size_t>(chunks));
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const bool exhaustive = n <= kDenseLimit;
  const auto near = exhaustive ? std::vector<std::vector<Index>>{} : radius_neighbors(space, 4 * cover.r);
  parallel_chunks(n, [&](Index begin, Index end, int c) {
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Index x = begin; x < end; ++x) {
      std::span<const Index> targets;
      if (exhaustive) {
        targets = std::span<const Index>(all.data() + x + 1, static_cast<std::size_t>(n - x - 1));
      } else {
        const auto& nb = near[x];
        const auto first = std::upper_bound(nb.begin(), nb.end(), x);
        targets = std::span<const Index>(nb.data() + (first - nb.begin()),
                                         static_cast<std::size_t>(nb.end() - first));
      }
      space.distances(x, targets, std::span<double>(row.data(), targets.size()));
      for (std::size_t t = 0; t < targets.size(); ++t) {
        if (!(row[t] > 0)) continue;
        Index member = -1;
        const double v = pair_value(x, targets[t], row[t], member);
        if (v > local[c].v) local[c] = {v, x, targets[t], member};
      }
    }
  });
  Local best;
  for (const auto& l : local)
    if (l.v > best.v) best = l;
  pou.lipschitz_D = std::max(0.0, best.v);
  // Pairs farther apart than 4r move any pi_a by at most 1.
  if (!exhaustive) pou.lipschitz_D = std::max(pou.lipschitz_D, 1.0 / (4 * cover.r));
  pou.lipschitz_witness = {pou.lipschitz_D, best.x, best.y, 1};
  pou.lipschitz_member = best.a;
  return pou;
}

SampledFunction smooth(const SampledFunction& f, const PartitionOfUnity& pou,
                       const CoverData& cover) {
  if (f.size() != static_cast<Index>(pou.terms.size())) {
    throw InputError("function and partition live on different spaces");
  }
  Eigen::VectorXcd g = Eigen::VectorXcd::Zero(f.size());
  for (Index x = 0; x < f.size(); ++x)
    for (const auto& t : pou.terms[x]) g[x] += t.value * f(cover.anchors[t.member]);
  return SampledFunction(f.space_ref(), std::move(g));
}

AppendixReport verify_appendix_bound(const SampledFunction& f, const SampledFunction& g,
                                     const CoverData& cover, const PartitionOfUnity& pou,
                                     const SampledSpace& space, double C_X,
                                     std::span<const double> scales,
                                     const AppendixOptions& options) {
  AppendixReport rep;
  rep.C_f = global_b_hl_constant(f, space).value;
  rep.N = cover.degree_N;
  rep.D = pou.lipschitz_D;
  rep.d = cover.diameter_d;
  rep.C_X = C_X;
  rep.bound = 4.0 * rep.N * rep.D * rep.C_f * (C_X + 2 * rep.d);
  std::vector<double> kept;
  for (double R : scales) (R > 2 * rep.d ? kept : rep.skipped_scales).push_back(R);
  const auto cg = sublinear_higson_profile(g, space, kept);
  const double allowed = (1 + options.relative_tolerance) * rep.bound + space.mesh();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    AppendixRow row{kept[k], cg[k].value, rep.bound, allowed - cg[k].value, cg[k].value <= allowed};
    rep.bound_pass = rep.bound_pass && row.pass;
    rep.rows.push_back(row);
  }
  const double top = space.max_norm() + space.mesh();
  std::vector<double> edges;
  for (const auto& [k, members] : space.annuli()) {
    const double lo = std::ldexp(1.0, k);
    if (!(lo > 2 * rep.d) || 2 * lo > top) continue;
    double sup = 0;
    for (Index x : members) sup = std::max(sup, std::abs(f(x) - g(x)));
    rep.annuli.push_back(k);
    rep.annulus_sups.push_back(sup);
    edges.push_back(lo);
  }
  if (rep.annulus_sups.size() < 2) throw EmptyScaleError("need two full annuli above 2d");
  rep.decay_slope = loglog_slope(edges, rep.annulus_sups);
  rep.decay_pass = rep.annulus_sups.back() == 0 || rep.decay_slope <= options.decay_slope;
  return rep;
}

SampledFunction hash_noise(const MetricSpace& space, std::uint64_t seed, double amplitude) {
  return SampledFunction::tabulate(space, [&](Index x) {
    const double nx = space.norm(x);
    const double size = nx > 0 ? std::min(1.0, amplitude / nx) : 1.0;
    return hash_sign(seed, static_cast<std::uint64_t>(x)) * size;
  });
}

TruncationReport c0_truncation(const SampledFunction& f, const SampledSpace& space, double eps) {
  if (!(eps > 0)) throw InputError("eps must be positive");
  const auto& norms = space.norms();
  auto tail = [&](double R) {
    double s = 0;
    for (Index x = 0; x < space.size(); ++x)
      if (norms[x] > R) s = std::max(s, std::abs(f(x)));
    return s;
  };
  TruncationReport rep;
  double R = 0;
  while (tail(R) > eps) R = R == 0 ? 1 : 2 * R;
  rep.R = R;
  rep.error = tail(R);
  rep.proper = 2 * R < space.max_norm();
  Eigen::VectorXcd v = f.values();
  for (Index x = 0; x < space.size(); ++x)
    if (norms[x] > R) v[x] = 0;
  rep.truncated = SampledFunction(f.space_ref(), std::move(v));
  return rep;
}

Json to_json(const CoverData& cover) {
  Json members = Json::array();
  for (const auto& m : cover.members) members.push_back(m);
  return {{"r", cover.r},
          {"anchors", cover.anchors},
          {"members", std::move(members)},
          {"lebesgue_L", std::isfinite(cover.lebesgue_L) ? Json(cover.lebesgue_L) : Json("inf")},
          {"diameter_d", cover.diameter_d},
          {"degree_N", cover.degree_N}};
}

Json to_json(const PartitionOfUnity& pou) {
  Json terms = Json::array();
  for (const auto& point : pou.terms) {
    Json row = Json::array();
    for (const auto& t : point) row.push_back({t.member, t.value});
    terms.push_back(std::move(row));
  }
  return {{"lipschitz_D", pou.lipschitz_D},
          {"min_total", pou.min_total},
          {"documented_bound", pou.documented_bound},
          {"terms", std::move(terms)}};
}

}  // namespace corona
