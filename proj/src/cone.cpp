#include "corona/cone.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace corona {

std::vector<WeightedEdge> x_adjacency(const SampledSpace& x, const ConeAdjacency& rule) {
  const Index n = x.size();
  std::set<std::pair<Index, Index>> pairs;
  switch (rule.kind) {
    case ConeAdjacency::Kind::consecutive:
      if (!x.is_line()) throw InputError("consecutive adjacency needs a line sample");
      for (Index i = 0; i + 1 < n; ++i) pairs.emplace(i, i + 1);
      break;
    case ConeAdjacency::Kind::nearest: {
      if (rule.k < 1) throw InputError("nearest adjacency needs k >= 1");
      const Index want = std::min<Index>(rule.k, n - 1);
      auto take = [&](Index i, std::vector<std::pair<double, Index>>& cand) {
        std::sort(cand.begin(), cand.end());
        for (Index t = 0; t < want && t < static_cast<Index>(cand.size()); ++t)
          pairs.emplace(std::min(i, cand[t].second), std::max(i, cand[t].second));
      };
      if (x.has_coordinates()) {
        const double cell = std::max(x.mesh(), 1e-9);
        const NearestIndex index(x.coordinates(), cell);
        for (Index i = 0; i < n; ++i) {
          const Eigen::VectorXd q = x.coordinates().row(i).transpose();
          double r = 1.5 * cell;
          std::vector<Index> near;
          while (true) {
            near = index.within(q, r);
            if (static_cast<Index>(near.size()) >= want + 1 || static_cast<Index>(near.size()) == n) break;
            r *= 2;
          }
          std::vector<std::pair<double, Index>> cand;
          for (Index j : near)
            if (j != i) cand.emplace_back(x.distance(i, j), j);
          take(i, cand);
        }
      } else {
        for (Index i = 0; i < n; ++i) {
          std::vector<std::pair<double, Index>> cand;
          for (Index j = 0; j < n; ++j)
            if (j != i) cand.emplace_back(x.distance(i, j), j);
          take(i, cand);
        }
      }
      break;
    }
    case ConeAdjacency::Kind::radius: {
      if (!(rule.radius > 0)) throw InputError("radius adjacency needs a positive radius");
      const auto nb = radius_neighbors(x, rule.radius);
      for (Index i = 0; i < n; ++i)
        for (Index j : nb[i])
          if (j > i) pairs.emplace(i, j);
      break;
    }
  }
  std::vector<WeightedEdge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) edges.push_back({i, j, x.distance(i, j)});
  return edges;
}

ConeSpace::ConeSpace(CompactGraph p, SampledSpace x, ConeOptions options)
    : p_(std::move(p)), x_(std::move(x)), options_(options) {
  np_ = p_.vertex_count();
  nx_ = x_.size();
  if (np_ == 0 || nx_ == 0) throw DegenerateSpaceError("cone factors must be nonempty");
  const Index n = np_ * nx_;
  if (n > options_.max_vertices) {
    throw ResourceError("cone has " + std::to_string(n) + " vertices; raise the cap to at least " +
                        std::to_string(n));
  }
  const auto xe = x_adjacency(x_, options_.adjacency);
  if (!is_connected(CsrGraph(nx_, xe))) {
    throw ConnectivityError("X is disconnected under the chosen adjacency");
  }
  x_edges_ = static_cast<Index>(xe.size());
  std::vector<WeightedEdge> edges;
  edges.reserve(static_cast<std::size_t>(np_) * xe.size() +
                static_cast<std::size_t>(nx_) * p_.edges().size());
  for (Index pv = 0; pv < np_; ++pv)
    for (const auto& e : xe) {
      edges.push_back({vertex(pv, e.u), vertex(pv, e.v), e.weight});
      mesh_ = std::max(mesh_, e.weight);
    }
  for (Index xv = 0; xv < nx_; ++xv) {
    const double scale = std::max(1.0, x_.norm(xv));
    for (const auto& e : p_.edges()) {
      edges.push_back({vertex(e.u, xv), vertex(e.v, xv), scale * e.weight});
      mesh_ = std::max(mesh_, scale * e.weight);
    }
  }
  graph_ = CsrGraph(n, edges);
  std::string rule = "nearest" + std::to_string(options_.adjacency.k);
  if (options_.adjacency.kind == ConeAdjacency::Kind::consecutive) rule = "consecutive";
  if (options_.adjacency.kind == ConeAdjacency::Kind::radius) {
    rule = "radius" + Json(options_.adjacency.radius).dump();
  }
  ref_ = "cone(" + p_.ref() + "," + x_.ref() + "," + rule + ")";
  norms_.resize(static_cast<std::size_t>(n));
  const Index b = base_vertex();
  for (Index v = 0; v < n; ++v) norms_[v] = distance(b, v);
  for (Index v = 0; v < n; ++v) {
    if (!std::isfinite(norms_[v])) throw ConnectivityError("cone vertex unreachable from the base");
  }
}

std::vector<double> ConeSpace::shortest_row(Index source) const {
  if (source < 0 || source >= size()) throw InputError("cone vertex out of range");
  std::vector<double> d;
  dijkstra(graph_, source, d);
  return d;
}

std::shared_ptr<const std::vector<double>> ConeSpace::row(Index source) const {
  {
    std::lock_guard lock(cache_->mutex);
    auto it = cache_->rows.find(source);
    if (it != cache_->rows.end()) return it->second;
  }
  auto fresh = std::make_shared<const std::vector<double>>(shortest_row(source));
  std::lock_guard lock(cache_->mutex);
  auto it = cache_->rows.find(source);
  if (it != cache_->rows.end()) return it->second;
  if (cache_->stored + size() > options_.row_cache_budget) {
    cache_->rows.clear();
    cache_->stored = 0;
  }
  cache_->rows.emplace(source, fresh);
  cache_->stored += size();
  return fresh;
}

std::pair<Index, Index> ConeSpace::canonical(Index a, Index b) const {
  if (a > b) std::swap(a, b);
  if (!p_.is_cyclic()) return {a, b};
  // Index shifts of a regular polygon are isometries of the product graph.
  const Index pa = p_of(a);
  const Index pb = (p_of(b) - pa + np_) % np_;
  return {vertex(0, x_of(a)), vertex(pb, x_of(b))};
}

double ConeSpace::distance(Index a, Index b) const {
  if (a < 0 || b < 0 || a >= size() || b >= size()) throw InputError("cone vertex out of range");
  if (a == b) return 0;
  const auto [src, col] = canonical(a, b);
  return (*row(src))[col];
}

void ConeSpace::distances(Index a, std::span<const Index> targets, std::span<double> out) const {
  Index held = -1;
  std::shared_ptr<const std::vector<double>> r;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k] == a) {
      out[k] = 0;
      continue;
    }
    const auto [src, col] = canonical(a, targets[k]);
    if (src != held) {
      r = row(src);
      held = src;
    }
    out[k] = (*r)[col];
  }
}

double ConeSpace::polyline_length(std::span<const std::pair<Index, Index>> points) const {
  if (points.empty()) throw InputError("polyline needs at least one point");
  double total = 0;
  for (std::size_t j = 0; j + 1 < points.size(); ++j) {
    const auto [p0, x0] = points[j];
    const auto [p1, x1] = points[j + 1];
    const double scale = std::max({1.0, x_.norm(x0), x_.norm(x1)});
    total += x_.distance(x0, x1) + scale * p_.distance(p0, p1);
  }
  return total;
}

double cone_distance(const ConeSpace& cone, std::pair<Index, Index> a, std::pair<Index, Index> b) {
  const auto& P = cone.p_space();
  const auto& X = cone.x_space();
  if (a.first < 0 || a.first >= P.vertex_count() || b.first < 0 || b.first >= P.vertex_count() ||
      a.second < 0 || a.second >= X.size() || b.second < 0 || b.second >= X.size()) {
    throw InputError("cone vertex out of range");
  }
  const double d = cone.distance(cone.vertex(a.first, a.second), cone.vertex(b.first, b.second));
  if (!std::isfinite(d)) throw ConnectivityError("cone vertices are not connected");
  return d;
}

ConeXNormView::ConeXNormView(const ConeSpace& cone) : cone_(cone) {
  norms_.resize(static_cast<std::size_t>(cone.size()));
  for (Index v = 0; v < cone.size(); ++v) norms_[v] = cone.x_space().norm(cone.x_of(v));
}

// Lower bound ------------------------------------------------------------

namespace {

struct Margin {
  double v = -kInf;
  Index a = -1, b = -1;
  void offer(double value, Index i, Index j) {
    if (value > v || (value == v && std::make_pair(i, j) < std::make_pair(a, b))) {
      v = value;
      a = i;
      b = j;
    }
  }
};

}  // namespace

LowerBoundReport verify_lower_bound(const ConeSpace& cone, double R, double tolerance) {
  const auto& X = cone.x_space();
  const auto& P = cone.p_space();
  if (!(R > 0)) throw InputError("R must be positive");
  if (!(R < X.max_norm())) throw PreconditionError("R must be below the largest X-norm");
  LowerBoundReport rep;
  rep.R = R;
  rep.tolerance = tolerance < 0 ? X.mesh() : tolerance;
  std::vector<Index> ids;
  for (Index v = 0; v < cone.size(); ++v)
    if (X.norm(cone.x_of(v)) > R) ids.push_back(v);
  if (ids.size() < 2) throw EmptyScaleError("no vertex pairs beyond R");
  const Index m = static_cast<Index>(ids.size());
  const int chunks = std::max(1, chunk_count(m));
  std::vector<Margin> weak(chunks), literal(chunks);
  std::vector<Index> violations(chunks, 0), checked(chunks, 0);
  parallel_chunks(m, [&](Index begin, Index end, int c) {
    std::vector<double> row(static_cast<std::size_t>(m));
    for (Index k = begin; k < end; ++k) {
      const Index a = ids[k];
      const std::span<const Index> targets(ids.data() + k + 1, static_cast<std::size_t>(m - k - 1));
      cone.distances(a, targets, std::span<double>(row.data(), targets.size()));
      const Index xa = cone.x_of(a), pa = cone.p_of(a);
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const Index b = targets[t];
        const Index xb = cone.x_of(b), pb = cone.p_of(b);
        const double dx = X.distance(xa, xb), dp = P.distance(pa, pb);
        weak[c].offer(dx + R * dp - row[t], a, b);
        const double lit = dx + std::max(X.norm(xa), X.norm(xb)) * dp - row[t];
        literal[c].offer(lit, a, b);
        if (lit > rep.tolerance) ++violations[c];
        ++checked[c];
      }
    }
  });
  Margin w, l;
  for (int c = 0; c < chunks; ++c) {
    if (weak[c].a >= 0) w.offer(weak[c].v, weak[c].a, weak[c].b);
    if (literal[c].a >= 0) l.offer(literal[c].v, literal[c].a, literal[c].b);
    rep.literal_violations += violations[c];
    rep.pairs_checked += checked[c];
  }
  rep.worst_margin = w.v;
  rep.witness = {w.a, w.b};
  rep.literal_worst_margin = l.v;
  rep.literal_witness = {l.a, l.b};
  rep.passed = rep.worst_margin <= rep.tolerance;
  return rep;
}

// Refinement -------------------------------------------------------------

namespace {

CompactGraph refinement_p(const RefinementSpec& spec, int level) {
  const double mesh = std::ldexp(spec.p_mesh, -level);
  if (spec.p_kind == "interval") return build_interval(mesh, spec.p_length);
  if (spec.p_kind == "sphere") return build_sphere_graph(spec.sphere_dim, mesh);
  if (spec.p_kind == "point") return build_point_graph();
  throw InputError("unknown P kind '" + spec.p_kind + "'");
}

Index match_row(const Eigen::MatrixXd& coords, const Eigen::RowVectorXd& target) {
  for (Index i = 0; i < coords.rows(); ++i)
    if ((coords.row(i) - target).cwiseAbs().maxCoeff() < 1e-9) return i;
  throw ConstructionError("refinement levels are not nested");
}

}  // namespace

RefinementReport refinement_convergence(const RefinementSpec& spec) {
  if (spec.levels < 2) throw InputError("refinement needs at least 2 levels");
  if (spec.probes.empty()) throw InputError("refinement needs probes");
  RefinementReport rep;
  rep.distances.assign(spec.probes.size(), {});
  Eigen::MatrixXd p0_coords;
  std::vector<double> x0_values;
  for (int level = 0; level < spec.levels; ++level) {
    try {
      const double step = std::ldexp(spec.x_step, -level);
      const auto n_max = static_cast<Index>(std::llround(spec.x_extent / step));
      const ConeSpace cone(refinement_p(spec, level), build_halfline(n_max, step), spec.options);
      if (level == 0) {
        p0_coords = cone.p_space().coordinates();
        for (Index x = 0; x < cone.x_space().size(); ++x) x0_values.push_back(cone.x_space().norm(x));
      }
      auto map_vertex = [&](std::pair<Index, Index> v0) {
        if (v0.first < 0 || v0.first >= p0_coords.rows() || v0.second < 0 ||
            v0.second >= static_cast<Index>(x0_values.size())) {
          throw InputError("probe vertex out of range");
        }
        const Index p = match_row(cone.p_space().coordinates(), p0_coords.row(v0.first));
        const Index x = static_cast<Index>(std::llround(x0_values[v0.second] / step));
        return cone.vertex(p, x);
      };
      for (std::size_t k = 0; k < spec.probes.size(); ++k) {
        const Index a = map_vertex(spec.probes[k].first);
        const Index b = map_vertex(spec.probes[k].second);
        rep.distances[k].push_back(cone.shortest_row(a)[b]);
      }
      rep.vertex_counts.push_back(cone.size());
    } catch (const ResourceError& e) {
      rep.complete = false;
      rep.note = e.what();
      break;
    }
  }
  const std::size_t done = rep.vertex_counts.size();
  for (std::size_t l = 1; l < done; ++l) {
    double worst = 0;
    for (const auto& d : rep.distances) {
      if (d[l] > d[l - 1] + 1e-9) rep.monotone = false;
      if (d[l - 1] > 0) worst = std::max(worst, std::abs(d[l] - d[l - 1]) / d[l - 1]);
    }
    rep.max_change.push_back(worst);
  }
  rep.final_change = rep.max_change.empty() ? 0 : rep.max_change.back();
  return rep;
}

}  // namespace corona
