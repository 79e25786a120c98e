#include "corona/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <unordered_map>

namespace corona {

double MetricSpace::norm(Index i) const {
  if (i < 0 || i >= size()) throw InputError("unknown point id " + std::to_string(i));
  return norms()[static_cast<std::size_t>(i)];
}

void MetricSpace::distances(Index i, std::span<const Index> targets, std::span<double> out) const {
  for (std::size_t k = 0; k < targets.size(); ++k) out[k] = distance(i, targets[k]);
}

// SampledSpace -----------------------------------------------------------

SampledSpace SampledSpace::from_coordinates(std::string kind, Json params, Eigen::MatrixXd coords,
                                            Index base_point, double quasi_geodesic_c,
                                            double mesh) {
  if (coords.rows() == 0) throw DegenerateSpaceError("space has no points");
  if (base_point < 0 || base_point >= coords.rows()) throw InputError("base point out of range");
  SampledSpace s;
  s.kind_ = std::move(kind);
  s.params_ = std::move(params);
  s.coords_ = std::move(coords);
  s.base_ = base_point;
  s.quasi_c_ = quasi_geodesic_c;
  s.mesh_ = mesh;
  s.finalize();
  return s;
}

SampledSpace SampledSpace::from_distance_matrix(std::string kind, Json params,
                                                Eigen::MatrixXd dist, Index base_point,
                                                double quasi_geodesic_c, double mesh) {
  if (dist.rows() == 0) throw DegenerateSpaceError("space has no points");
  if (dist.rows() != dist.cols()) throw InputError("distance matrix must be square");
  if (dist.rows() > kDenseLimit) {
    throw ResourceError("coordinate-free spaces are limited to " + std::to_string(kDenseLimit) +
                        " points");
  }
  if (base_point < 0 || base_point >= dist.rows()) throw InputError("base point out of range");
  SampledSpace s;
  s.kind_ = std::move(kind);
  s.params_ = std::move(params);
  s.dense_ = std::move(dist);
  s.base_ = base_point;
  s.quasi_c_ = quasi_geodesic_c;
  s.mesh_ = mesh;
  s.finalize();
  return s;
}

void SampledSpace::finalize() {
  ref_ = kind_ + params_.dump();
  const Index n = dense_.size() > 0 ? dense_.rows() : coords_.rows();
  norms_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) norms_[i] = distance(base_, i);
  annuli_.clear();
  for (Index i = 0; i < n; ++i) {
    const int k = annulus_index(norms_[i]);
    if (k != kCoreAnnulus) annuli_[k].push_back(i);
  }
  line_ = false;
  if (coords_.cols() == 1 && base_ == 0) {
    line_ = true;
    for (Index i = 0; i < n && line_; ++i) {
      if (coords_(i, 0) < coords_(0, 0)) line_ = false;
      if (i > 0 && !(coords_(i, 0) > coords_(i - 1, 0))) line_ = false;
    }
  }
}

double SampledSpace::distance(Index i, Index j) const {
  if (dense_.size() > 0) return dense_(i, j);
  if (coords_.cols() == 1) return std::abs(coords_(i, 0) - coords_(j, 0));
  double acc = 0;
  for (Eigen::Index a = 0; a < coords_.cols(); ++a) {
    const double diff = coords_(i, a) - coords_(j, a);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

void SampledSpace::distances(Index i, std::span<const Index> targets,
                             std::span<double> out) const {
  if (dense_.size() > 0) {
    for (std::size_t k = 0; k < targets.size(); ++k) out[k] = dense_(i, targets[k]);
    return;
  }
  const Eigen::Index dim = coords_.cols();
  if (dim == 1) {
    const double c = coords_(i, 0);
    for (std::size_t k = 0; k < targets.size(); ++k) out[k] = std::abs(c - coords_(targets[k], 0));
    return;
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    double acc = 0;
    for (Eigen::Index a = 0; a < dim; ++a) {
      const double diff = coords_(i, a) - coords_(targets[k], a);
      acc += diff * diff;
    }
    out[k] = std::sqrt(acc);
  }
}

double SampledSpace::max_norm() const { return *std::max_element(norms_.begin(), norms_.end()); }

std::vector<Index> SampledSpace::ball(double R) const {
  std::vector<Index> ids;
  for (Index i = 0; i < size(); ++i)
    if (norms_[i] <= R) ids.push_back(i);
  return ids;
}

std::vector<Index> SampledSpace::outside_ball(double R) const {
  std::vector<Index> ids;
  for (Index i = 0; i < size(); ++i)
    if (norms_[i] > R) ids.push_back(i);
  return ids;
}

// CompactGraph -----------------------------------------------------------

CompactGraph::CompactGraph(std::string kind, Json params, Eigen::MatrixXd coords,
                           std::vector<WeightedEdge> edges, bool cyclic)
    : kind_(std::move(kind)),
      params_(std::move(params)),
      coords_(std::move(coords)),
      edges_(std::move(edges)),
      cyclic_(cyclic) {
  ref_ = kind_ + params_.dump();
  const Index n = coords_.rows();
  if (n == 0) throw DegenerateSpaceError("compact graph has no vertices");
  graph_ = CsrGraph(n, edges_);
  if (!is_connected(graph_)) throw ConstructionError("compact graph is disconnected: mesh too coarse");
  for (const auto& e : edges_) {
    if (!(e.weight > 0)) throw ConstructionError("compact graph edges need positive length");
    mesh_ = std::max(mesh_, e.weight);
  }
  dist_.resize(n, n);
  std::vector<double> row;
  for (Index s = 0; s < n; ++s) {
    dijkstra(graph_, s, row);
    for (Index t = 0; t < n; ++t) dist_(s, t) = row[t];
  }
  // Symmetrize exactly; Dijkstra sums in different orders can differ by an ulp.
  for (Index s = 0; s < n; ++s)
    for (Index t = s + 1; t < n; ++t) {
      const double d = std::min(dist_(s, t), dist_(t, s));
      dist_(s, t) = dist_(t, s) = d;
    }
  diameter_ = dist_.maxCoeff();
}

// Builders ---------------------------------------------------------------

SampledSpace build_halfline(Index n_max, double step) {
  if (n_max < 1) throw DegenerateSpaceError("half-line needs n_max >= 1");
  if (!(step > 0)) throw InputError("half-line step must be positive");
  Eigen::MatrixXd coords(n_max + 1, 1);
  for (Index i = 0; i <= n_max; ++i) coords(i, 0) = static_cast<double>(i) * step;
  Json params = {{"n_max", n_max}, {"step", step}};
  return SampledSpace::from_coordinates("halfline", std::move(params), std::move(coords), 0,
                                        std::max(1.0, step), step);
}

namespace {

double unit_ball_volume(int dim) {
  return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

// Lattice points h*(i + offset) with inner <= |p| < outer, in lexicographic
// order of the integer multi-index.
std::vector<Eigen::VectorXd> annulus_lattice(int dim, double inner, double outer, double h,
                                             const Eigen::VectorXd& offset) {
  std::vector<Eigen::VectorXd> pts;
  std::vector<long long> lo(dim), hi(dim), idx(dim);
  for (int a = 0; a < dim; ++a) {
    lo[a] = static_cast<long long>(std::floor(-outer / h - offset[a])) - 1;
    hi[a] = static_cast<long long>(std::ceil(outer / h - offset[a])) + 1;
    idx[a] = lo[a];
  }
  Eigen::VectorXd p(dim);
  while (true) {
    double r2 = 0;
    for (int a = 0; a < dim; ++a) {
      p[a] = h * (static_cast<double>(idx[a]) + offset[a]);
      r2 += p[a] * p[a];
    }
    const double r = std::sqrt(r2);
    if (r >= inner && r < outer) pts.push_back(p);
    int a = dim - 1;
    while (a >= 0 && ++idx[a] > hi[a]) {
      idx[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
  return pts;
}

}  // namespace

SampledSpace build_euclidean_grid(int dim, double max_radius, int density, std::uint64_t seed,
                                  double max_spacing) {
  if (dim < 1 || dim > 4) throw InputError("grid dimension must be in 1..4");
  if (density < dim + 1) throw InputError("grid density must be at least dim + 1");
  if (!(max_radius > 1)) throw DegenerateSpaceError("grid radius must exceed 1");
  if (!(max_spacing > 0)) throw InputError("grid spacing cap must be positive");

  std::vector<Eigen::VectorXd> points{Eigen::VectorXd::Zero(dim)};
  double mesh = 0;
  std::vector<double> spacings;
  for (int k = 0; std::ldexp(1.0, k) < max_radius; ++k) {
    const double inner = std::ldexp(1.0, k);
    const double outer = std::min(std::ldexp(1.0, k + 1), max_radius);
    const double volume =
        unit_ball_volume(dim) * (std::pow(outer, dim) - std::pow(inner, dim));
    double h = std::min(max_spacing, std::pow(volume / density, 1.0 / dim));
    Eigen::VectorXd offset(dim);
    for (int a = 0; a < dim; ++a)
      offset[a] = unit_interval(mix64(mix64(seed, static_cast<std::uint64_t>(k)), a));
    std::vector<Eigen::VectorXd> pts;
    for (int attempt = 0; attempt < 200; ++attempt) {
      pts = annulus_lattice(dim, inner, outer, h, offset);
      if (static_cast<int>(pts.size()) >= density) break;
      h *= 0.9;
    }
    if (static_cast<int>(pts.size()) < density) {
      throw ConstructionError("annulus " + std::to_string(k) + " could not reach the density");
    }
    mesh = std::max(mesh, h);
    spacings.push_back(h);
    points.insert(points.end(), pts.begin(), pts.end());
  }
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(points.size()), dim);
  for (std::size_t i = 0; i < points.size(); ++i) coords.row(static_cast<Eigen::Index>(i)) = points[i];
  Json params = {{"dim", dim},
                 {"max_radius", max_radius},
                 {"density", density},
                 {"seed", seed},
                 {"max_spacing", max_spacing}};
  return SampledSpace::from_coordinates("euclidean_grid", std::move(params), std::move(coords), 0,
                                        std::max(2.0, 2.0 * mesh), mesh);
}

SampledSpace build_point_cloud(const Eigen::MatrixXd& coords, Index base_point,
                               double quasi_geodesic_c, std::string label) {
  // Mesh of an arbitrary cloud: the largest nearest-neighbour gap.
  const Index n = coords.rows();
  double mesh = 0;
  for (Index i = 0; i < n; ++i) {
    double best = kInf;
    for (Index j = 0; j < n; ++j)
      if (j != i) best = std::min(best, (coords.row(i) - coords.row(j)).norm());
    if (best < kInf) mesh = std::max(mesh, best);
  }
  std::uint64_t h = 0;
  for (Index i = 0; i < coords.size(); ++i) {
    std::uint64_t bits;
    const double v = coords.data()[i];
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h, bits);
  }
  Json params = {{"label", label}, {"points", n}, {"hash", h}};
  return SampledSpace::from_coordinates("cloud", std::move(params), coords, base_point,
                                        quasi_geodesic_c, mesh > 0 ? mesh : 1.0);
}

CompactGraph build_interval(double mesh, double length) {
  if (!(length > 0)) throw InputError("interval length must be positive");
  if (!(mesh > 0) || mesh >= length) throw ConstructionError("interval mesh must be in (0, length)");
  const Index n = static_cast<Index>(std::ceil(length / mesh - 1e-12)) + 1;
  Eigen::MatrixXd coords(n, 1);
  std::vector<WeightedEdge> edges;
  for (Index i = 0; i < n; ++i) coords(i, 0) = length * static_cast<double>(i) / static_cast<double>(n - 1);
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, coords(i + 1, 0) - coords(i, 0)});
  Json params = {{"mesh", mesh}, {"length", length}};
  return CompactGraph("interval", std::move(params), std::move(coords), std::move(edges));
}

namespace {

double arc(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

CompactGraph build_circle(double mesh) {
  Index n = 4;
  while (2 * std::numbers::pi / static_cast<double>(n) > mesh) n *= 2;
  Eigen::MatrixXd coords(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    coords(i, 0) = std::cos(t);
    coords(i, 1) = std::sin(t);
  }
  const double w = 2 * std::numbers::pi / static_cast<double>(n);
  std::vector<WeightedEdge> edges;
  for (Index i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, w});
  Json params = {{"dim", 2}, {"mesh", mesh}};
  return CompactGraph("sphere", std::move(params), std::move(coords), std::move(edges), true);
}

CompactGraph build_icosphere(double mesh) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Eigen::Vector3d> v = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
      {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<Index, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  auto max_edge = [&]() {
    double m = 0;
    for (const auto& f : faces)
      for (int a = 0; a < 3; ++a) m = std::max(m, arc(v[f[a]], v[f[(a + 1) % 3]]));
    return m;
  };
  int level = 0;
  while (max_edge() > mesh) {
    if (++level > 4) throw ResourceError("sphere mesh finer than 4 subdivision levels");
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const Index id = static_cast<Index>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<Index, 3>> next;
    for (const auto& f : faces) {
      const Index ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  std::map<std::pair<Index, Index>, double> unique;
  for (const auto& f : faces)
    for (int a = 0; a < 3; ++a) {
      const auto key = std::minmax(f[a], f[(a + 1) % 3]);
      unique.emplace(key, arc(v[key.first], v[key.second]));
    }
  std::vector<WeightedEdge> edges;
  for (const auto& [key, w] : unique) edges.push_back({key.first, key.second, w});
  Eigen::MatrixXd coords(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) coords.row(static_cast<Eigen::Index>(i)) = v[i];
  Json params = {{"dim", 3}, {"mesh", mesh}};
  return CompactGraph("sphere", std::move(params), std::move(coords), std::move(edges));
}

}  // namespace

CompactGraph build_sphere_graph(int dim, double mesh) {
  if (!(mesh > 0) || mesh >= std::numbers::pi) {
    throw ConstructionError("sphere mesh must be in (0, pi)");
  }
  if (dim == 2) return build_circle(mesh);
  if (dim == 3) return build_icosphere(mesh);
  throw InputError("sphere graphs are available for dim 2 and 3");
}

CompactGraph build_point_graph() {
  return CompactGraph("point", Json::object(), Eigen::MatrixXd::Zero(1, 1), {});
}

SampledSpace space_from_graph(const CompactGraph& p) {
  Json params = {{"graph", p.ref()}};
  return SampledSpace::from_distance_matrix("graph", std::move(params), p.distances(), 0, 1.0,
                                            p.mesh() > 0 ? p.mesh() : 1.0);
}

// Diagnostics ------------------------------------------------------------

MetricReport validate_metric(const MetricSpace& space, double tol, Index max_triples,
                             std::uint64_t seed) {
  MetricReport rep;
  const Index n = space.size();
  for (Index i = 0; i < n; ++i) {
    rep.worst_self_distance = std::max(rep.worst_self_distance, std::abs(space.distance(i, i)));
    for (Index j = i + 1; j < n; ++j) {
      const double a = space.distance(i, j), b = space.distance(j, i);
      rep.worst_asymmetry = std::max(rep.worst_asymmetry, std::abs(a - b));
      if (!(a >= 0)) rep.passed = false;
    }
  }
  auto check = [&](Index i, Index j, Index k) {
    const double excess = space.distance(i, k) - space.distance(i, j) - space.distance(j, k);
    ++rep.triples_checked;
    if (excess > rep.worst_triangle_excess) {
      rep.worst_triangle_excess = excess;
      rep.witness = {i, j, k};
    }
  };
  const double triples = static_cast<double>(n) * n * n;
  if (triples <= static_cast<double>(max_triples)) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) check(i, j, k);
  } else {
    for (Index t = 0; t < max_triples; ++t) {
      const auto u = static_cast<std::uint64_t>(n);
      check(static_cast<Index>(mix64(seed, 3 * t) % u), static_cast<Index>(mix64(seed, 3 * t + 1) % u),
            static_cast<Index>(mix64(seed, 3 * t + 2) % u));
    }
  }
  if (rep.worst_self_distance != 0 || rep.worst_asymmetry != 0) rep.passed = false;
  if (rep.worst_triangle_excess > tol) rep.passed = false;
  return rep;
}

QuasiGeodesicReport quasi_geodesic_check(const SampledSpace& space, double C, Index trials,
                                         std::uint64_t seed) {
  if (!(C >= 1)) throw InputError("quasi-geodesic constant must be >= 1");
  QuasiGeodesicReport rep;
  rep.C = C;
  const Index n = space.size();

  // Hop graph: pairs at distance <= C.
  std::vector<WeightedEdge> edges;
  if (space.has_coordinates()) {
    NearestIndex index(space.coordinates(), C);
    for (Index i = 0; i < n; ++i) {
      for (Index j : index.within(space.coordinates().row(i).transpose(), C))
        if (j > i) edges.push_back({i, j, space.distance(i, j)});
    }
  } else {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (space.distance(i, j) <= C) edges.push_back({i, j, space.distance(i, j)});
  }
  const CsrGraph hops(n, edges);

  std::vector<std::pair<Index, Index>> pairs;
  const double all_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (static_cast<double>(trials) >= all_pairs) {
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  } else {
    for (Index t = 0; t < trials; ++t) {
      const auto u = static_cast<std::uint64_t>(n);
      Index a = static_cast<Index>(mix64(seed, 2 * t) % u);
      Index b = static_cast<Index>(mix64(seed, 2 * t + 1) % u);
      if (a == b) b = (b + 1) % n;
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    }
  }

  for (const auto& [x, y] : pairs) {
    ++rep.pairs_checked;
    const auto chain = shortest_path(hops, x, y);
    if (chain.empty()) {
      rep.passed = false;
      rep.disconnected = true;
      rep.worst_violation = kInf;
      rep.witness = {x, y};
      return rep;
    }
    const double target = space.distance(x, y);
    const std::size_t m = chain.size();
    std::vector<double> a(m + 1, 0.0);
    for (std::size_t k = 1; k < m; ++k) a[k] = a[k - 1] + space.distance(chain[k - 1], chain[k]);
    const double length = a[m - 1];
    if (length > 0)
      for (std::size_t k = 0; k < m; ++k) a[k] *= target / length;
    a[m] = a[m - 1];  // the endpoint occupies a degenerate interval
    // f(s) = chain[k] on [a_k, a_{k+1}); inf and sup of |s - s'| over two
    // such intervals give the binding side of each inequality.
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        const double d = space.distance(chain[i], chain[j]);
        const double gap_min = j == i ? 0.0 : std::max(0.0, a[j] - a[i + 1]);
        const double gap_max = a[j + 1] - a[i];
        const double upper = d - (C * gap_min + C);
        const double lower = (gap_max / C - C) - d;
        const double v = std::max(upper, lower);
        if (v > rep.worst_violation || rep.witness.first < 0) {
          if (v > rep.worst_violation) rep.worst_violation = v;
          if (rep.witness.first < 0 || v >= rep.worst_violation) rep.witness = {x, y};
        }
      }
    }
  }
  rep.passed = rep.worst_violation <= 0;
  return rep;
}

std::vector<std::vector<Index>> radius_neighbors(const MetricSpace& space, double r) {
  const Index n = space.size();
  std::vector<std::vector<Index>> out(static_cast<std::size_t>(n));
  const auto* sampled = dynamic_cast<const SampledSpace*>(&space);
  if (space.is_line()) {
    const auto& nm = space.norms();
    for (Index x = 0; x < n; ++x) {
      Index lo = x, hi = x;
      while (lo > 0 && nm[x] - nm[lo - 1] <= r) --lo;
      while (hi + 1 < n && nm[hi + 1] - nm[x] <= r) ++hi;
      for (Index y = lo; y <= hi; ++y)
        if (space.distance(x, y) <= r) out[x].push_back(y);
    }
  } else if (sampled != nullptr && sampled->has_coordinates()) {
    const NearestIndex index(sampled->coordinates(), std::max(r, 1e-9));
    parallel_chunks(n, [&](Index begin, Index end, int) {
      for (Index x = begin; x < end; ++x) {
        for (Index y : index.within(sampled->coordinates().row(x).transpose(), r * (1 + 1e-9) + 1e-12))
          if (space.distance(x, y) <= r) out[x].push_back(y);
      }
    });
  } else {
    parallel_chunks(n, [&](Index begin, Index end, int) {
      std::vector<Index> all(static_cast<std::size_t>(n));
      std::vector<double> row(static_cast<std::size_t>(n));
      for (Index y = 0; y < n; ++y) all[y] = y;
      for (Index x = begin; x < end; ++x) {
        space.distances(x, all, row);
        for (Index y = 0; y < n; ++y)
          if (row[y] <= r) out[x].push_back(y);
      }
    });
  }
  return out;
}

// NearestIndex -----------------------------------------------------------

NearestIndex::NearestIndex(const Eigen::MatrixXd& coords, double cell)
    : coords_(coords), cell_(cell) {
  if (!(cell > 0)) throw InputError("nearest-index cell must be positive");
  const Eigen::Index dim = coords.cols();
  lo_.assign(dim, 0);
  hi_.assign(dim, 0);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    const auto c = cell_of(coords.row(i).transpose());
    for (Eigen::Index a = 0; a < dim; ++a) {
      if (i == 0 || c[a] < lo_[a]) lo_[a] = c[a];
      if (i == 0 || c[a] > hi_[a]) hi_[a] = c[a];
    }
    buckets_[key(c)].push_back(i);
  }
}

std::vector<long long> NearestIndex::cell_of(const Eigen::Ref<const Eigen::VectorXd>& q) const {
  std::vector<long long> c(q.size());
  for (Eigen::Index a = 0; a < q.size(); ++a) c[a] = static_cast<long long>(std::floor(q[a] / cell_));
  return c;
}

std::uint64_t NearestIndex::key(const std::vector<long long>& cell) const {
  std::uint64_t h = 0x1234;
  for (long long c : cell) h = mix64(h, static_cast<std::uint64_t>(c));
  return h;
}

std::pair<Index, double> NearestIndex::nearest(const Eigen::Ref<const Eigen::VectorXd>& q) const {
  const auto center = cell_of(q);
  const std::size_t dim = center.size();
  long long max_ring = 0;
  for (std::size_t a = 0; a < dim; ++a)
    max_ring = std::max({max_ring, std::llabs(center[a] - lo_[a]), std::llabs(hi_[a] - center[a])});
  Index best = -1;
  double best_d = kInf;
  std::vector<long long> off(dim);
  for (long long ring = 0; ring <= max_ring; ++ring) {
    // Cells with Chebyshev offset exactly `ring`.
    std::fill(off.begin(), off.end(), -ring);
    while (true) {
      long long cheb = 0;
      for (auto o : off) cheb = std::max(cheb, std::llabs(o));
      if (cheb == ring) {
        std::vector<long long> c(dim);
        for (std::size_t a = 0; a < dim; ++a) c[a] = center[a] + off[a];
        auto it = buckets_.find(key(c));
        if (it != buckets_.end()) {
          for (Index id : it->second) {
            const double d = (coords_.row(id).transpose() - q).norm();
            if (d < best_d || (d == best_d && id < best)) {
              best_d = d;
              best = id;
            }
          }
        }
      }
      std::size_t a = dim;
      while (a > 0 && ++off[a - 1] > ring) {
        off[a - 1] = -ring;
        --a;
      }
      if (a == 0) break;
    }
    // Anything in a farther ring is at least ring * cell away.
    if (best >= 0 && best_d < static_cast<double>(ring) * cell_) break;
  }
  return {best, best_d};
}

std::vector<Index> NearestIndex::within(const Eigen::Ref<const Eigen::VectorXd>& q, double r) const {
  const auto center = cell_of(q);
  const std::size_t dim = center.size();
  const long long reach = static_cast<long long>(std::ceil(r / cell_));
  std::vector<Index> out;
  std::vector<long long> off(dim, -reach);
  while (true) {
    std::vector<long long> c(dim);
    for (std::size_t a = 0; a < dim; ++a) c[a] = center[a] + off[a];
    auto it = buckets_.find(key(c));
    if (it != buckets_.end())
      for (Index id : it->second)
        if ((coords_.row(id).transpose() - q).norm() <= r) out.push_back(id);
    std::size_t a = dim;
    while (a > 0 && ++off[a - 1] > reach) {
      off[a - 1] = -reach;
      --a;
    }
    if (a == 0) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace corona
