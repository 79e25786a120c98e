#include "corona/maps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace corona {

SampledMap::SampledMap(const MetricSpace& domain, const MetricSpace& codomain,
                       std::vector<Index> assignment, std::vector<double> displacement)
    : domain_(&domain), codomain_(&codomain), assignment_(std::move(assignment)),
      displacement_(std::move(displacement)) {
  if (static_cast<Index>(assignment_.size()) != domain.size()) {
    throw InputError("map must assign every domain point");
  }
  for (Index y : assignment_)
    if (y < 0 || y >= codomain.size()) throw InputError("map assigns a point outside the codomain");
  if (displacement_.empty()) displacement_.assign(assignment_.size(), 0.0);
  if (displacement_.size() != assignment_.size()) throw InputError("displacement size mismatch");
}

double SampledMap::max_displacement() const {
  return displacement_.empty() ? 0.0 : *std::max_element(displacement_.begin(), displacement_.end());
}

SampledMap snap_map(const MetricSpace& domain, const SampledSpace& codomain,
                    const std::function<Eigen::VectorXd(Index)>& target) {
  if (!codomain.has_coordinates()) throw InputError("snapping needs a coordinate codomain");
  const NearestIndex index(codomain.coordinates(), std::max(codomain.mesh(), 1e-9));
  const Index n = domain.size();
  std::vector<Index> assign(static_cast<std::size_t>(n));
  std::vector<double> shift(static_cast<std::size_t>(n));
  parallel_chunks(n, [&](Index begin, Index end, int) {
    for (Index x = begin; x < end; ++x) {
      const Eigen::VectorXd q = target(x);
      if (q.size() != codomain.dimension()) throw InputError("target has the wrong dimension");
      const auto [id, d] = index.nearest(q);
      assign[x] = id;
      shift[x] = d;
    }
  });
  return SampledMap(domain, codomain, std::move(assign), std::move(shift));
}

SampledMap identity_map(const MetricSpace& space) {
  std::vector<Index> a(static_cast<std::size_t>(space.size()));
  std::iota(a.begin(), a.end(), Index{0});
  return SampledMap(space, space, std::move(a));
}

SampledMap compose(const SampledMap& g, const SampledMap& f) {
  if (f.codomain().ref() != g.domain().ref() || f.codomain().size() != g.domain().size()) {
    throw InputError("cannot compose: codomain of f is not the domain of g");
  }
  std::vector<Index> a(static_cast<std::size_t>(f.size()));
  std::vector<double> shift(a.size());
  for (Index x = 0; x < f.size(); ++x) {
    a[x] = g(f(x));
    shift[x] = f.displacement()[x] + g.displacement()[f(x)];
  }
  return SampledMap(f.domain(), g.codomain(), std::move(a), std::move(shift));
}

SampledFunction pullback(const SampledFunction& phi, const SampledMap& f) {
  if (phi.size() != f.codomain().size()) throw InputError("function does not live on the codomain");
  Eigen::VectorXcd v(f.size());
  for (Index x = 0; x < f.size(); ++x) v[x] = phi(f(x));
  return SampledFunction(f.domain().ref(), std::move(v));
}

Json to_json(const SampledMap& f) {
  return {{"domain_ref", f.domain().ref()},
          {"codomain_ref", f.codomain().ref()},
          {"assignment", f.assignment()}};
}

SampledMap map_from_json(const Json& j, const MetricSpace& domain, const MetricSpace& codomain) {
  try {
    if (j.at("domain_ref").get<std::string>() != domain.ref() ||
        j.at("codomain_ref").get<std::string>() != codomain.ref()) {
      throw InputError("serialized map belongs to other spaces");
    }
    return SampledMap(domain, codomain, j.at("assignment").get<std::vector<Index>>());
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed map: ") + e.what());
  }
}

// Coarse constant -----------------------------------------------------------

namespace {

constexpr double kStep = 1e-3;

long long grid_index(double a) { return static_cast<long long>(std::ceil(a / kStep)); }

struct Requirement {
  double value = -1;
  long long top = 0;  // grid index of the largest requirement seen
  Index top_count = 0;
  Index i = -1, j = -1;

  void offer(double v, Index a, Index b) {
    if (v > value || (v == value && std::make_pair(a, b) < std::make_pair(i, j))) {
      value = v;
      i = a;
      j = b;
    }
    const long long k = grid_index(v);
    if (k > top) {
      top = k;
      top_count = 1;
    } else if (k == top) {
      ++top_count;
    }
  }
};

}  // namespace

CoarseMapReport coarse_constant(const SampledMap& f, const CoarseOptions& options) {
  const MetricSpace& X = f.domain();
  const MetricSpace& Y = f.codomain();
  const Index n = X.size();
  CoarseMapReport rep;

  // |x|/A - A <= |f(x)| holds iff A >= the positive root of A^2 + |f|A - |x|.
  Requirement proper;
  std::vector<double> req(static_cast<std::size_t>(n), 0.0);
  for (Index x = 0; x < n; ++x) {
    const double F = Y.norm(f(x));
    const double a = (-F + std::sqrt(F * F + 4 * X.norm(x))) / 2;
    proper.offer(a, x, x);
    req[x] = a;
  }

  const int chunks = std::max(1, chunk_count(n));
  std::vector<Requirement> local(static_cast<std::size_t>(chunks));
  std::vector<std::vector<double>> local_req(static_cast<std::size_t>(chunks));
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  const auto& image = f.assignment();
  parallel_chunks(n, [&](Index begin, Index end, int c) {
    auto& best = local[c];
    auto& rq = local_req[c];
    rq.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> dx(static_cast<std::size_t>(n)), dy(static_cast<std::size_t>(n));
    for (Index x = begin; x < end; ++x) {
      const auto m = static_cast<std::size_t>(n - x - 1);
      if (m == 0) continue;
      X.distances(x, std::span<const Index>(all.data() + x + 1, m), std::span<double>(dx.data(), m));
      Y.distances(image[x], std::span<const Index>(image.data() + x + 1, m),
                  std::span<double>(dy.data(), m));
      const double nx = X.norm(x);
      for (std::size_t t = 0; t < m; ++t) {
        const Index y = x + 1 + static_cast<Index>(t);
        const double a = dy[t] / (dx[t] + 1);
        best.offer(a, x, y);
        const Index owner = X.norm(y) >= nx ? y : x;
        rq[owner] = std::max(rq[owner], a);
      }
    }
  });
  Requirement lip;
  for (const auto& l : local) {
    if (l.value > lip.value || (l.value == lip.value && std::make_pair(l.i, l.j) < std::make_pair(lip.i, lip.j))) {
      lip.value = l.value;
      lip.i = l.i;
      lip.j = l.j;
    }
    if (l.top > lip.top) {
      lip.top = l.top;
      lip.top_count = l.top_count;
    } else if (l.top == lip.top) {
      lip.top_count += l.top_count;
    }
  }
  for (const auto& rq : local_req)
    for (std::size_t p = 0; p < rq.size(); ++p) req[p] = std::max(req[p], rq[p]);

  rep.pairs_checked = n * (n - 1) / 2;
  rep.A_properness = std::max(0.0, proper.value);
  rep.A_lipschitz = std::max(0.0, lip.value);
  rep.properness_witness = proper.i;
  rep.lipschitz_witness = {lip.i, lip.j};
  const double raw = std::max({1.0, rep.A_properness, rep.A_lipschitz});
  long long k = std::max<long long>(std::llround(1.0 / kStep), std::max(proper.top, lip.top));
  while (static_cast<double>(k) * kStep < raw) ++k;
  rep.A_lower = static_cast<double>(k) * kStep;
  if (raw > 1) {
    if (proper.top == k) rep.violations_below += proper.top_count;
    if (lip.top == k) rep.violations_below += lip.top_count;
    rep.violations_below = std::max<Index>(rep.violations_below, 1);
  }

  std::map<int, double> per;
  for (Index x = 0; x < n; ++x) {
    const int a = annulus_index(X.norm(x));
    if (a == kCoreAnnulus || a < 0) continue;
    auto [it, fresh] = per.emplace(a, req[x]);
    if (!fresh) it->second = std::max(it->second, req[x]);
  }
  std::vector<double> edges;
  for (const auto& [a, v] : per) {
    rep.annuli.push_back(a);
    rep.annulus_requirement.push_back(v);
    edges.push_back(std::ldexp(1.0, a));
  }
  rep.requirement_slope = per.size() >= 3 ? loglog_slope(edges, rep.annulus_requirement) : 0.0;
  rep.coarse = rep.A_lower <= options.max_A && rep.requirement_slope <= options.slope_threshold;
  return rep;
}

// Closeness -----------------------------------------------------------------

ClosenessReport closeness(const SampledMap& f, const SampledMap& g, const ClosenessOptions& options) {
  if (f.domain().ref() != g.domain().ref() || f.codomain().ref() != g.codomain().ref() ||
      f.size() != g.size()) {
    throw InputError("closeness needs maps with the same domain and codomain");
  }
  const MetricSpace& X = f.domain();
  const MetricSpace& Y = f.codomain();
  const Index n = X.size();
  ClosenessReport rep;
  std::vector<double> d(static_cast<std::size_t>(n));
  for (Index x = 0; x < n; ++x) {
    d[x] = Y.distance(f(x), g(x));
    if (d[x] > rep.max_distance) {
      rep.max_distance = d[x];
      rep.max_witness = x;
    }
  }
  for (int k = 0; k < options.eps_levels; ++k) {
    const double eps = std::ldexp(1.0, -k);
    double c = 0;
    for (Index x = 0; x < n; ++x) c = std::max(c, d[x] - eps * X.norm(x));
    rep.eps.push_back(eps);
    rep.C_eps.push_back(c);
  }
  std::map<int, double> per;
  for (Index x = 0; x < n; ++x) {
    const int a = annulus_index(X.norm(x));
    if (a == kCoreAnnulus || a < 0) continue;
    auto [it, fresh] = per.emplace(a, d[x] / X.norm(x));
    if (!fresh) it->second = std::max(it->second, d[x] / X.norm(x));
  }
  std::vector<double> edges;
  for (const auto& [a, v] : per) {
    rep.annuli.push_back(a);
    rep.annulus_ratio.push_back(v);
    edges.push_back(std::ldexp(1.0, a));
  }
  rep.ratio_slope = loglog_slope(edges, rep.annulus_ratio);
  if (rep.annulus_ratio.empty()) {
    rep.sublinearly_close = rep.max_distance == 0;
  } else {
    const double first = rep.annulus_ratio.front(), last = rep.annulus_ratio.back();
    rep.sublinearly_close = last < options.threshold && last <= first;
  }
  return rep;
}

// Separation ----------------------------------------------------------------

SeparationReport separating_witness(const SampledMap& f, const SampledMap& g,
                                    std::span<const Index> sequence, double c) {
  if (f.domain().ref() != g.domain().ref() || f.codomain().ref() != g.codomain().ref()) {
    throw InputError("separation needs maps with the same domain and codomain");
  }
  if (!(c > 0)) throw InputError("c must be positive");
  if (sequence.empty()) throw InputError("empty sequence");
  const MetricSpace& X = f.domain();
  const MetricSpace& Y = f.codomain();
  SeparationReport rep;
  for (Index x : sequence) {
    if (x < 0 || x >= X.size()) throw InputError("sequence point outside the domain");
    const double gap = Y.distance(f(x), g(x));
    if (!(X.norm(x) > 0) || gap < c * X.norm(x)) {
      throw PreconditionError("d(f(x), g(x)) < c|x| at point " + std::to_string(x));
    }
    rep.sequence.push_back(x);
    rep.radii.push_back(c * X.norm(x) / 4);
  }
  const Index m = Y.size();
  std::vector<Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Index{0});
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m);
  std::vector<double> row(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < rep.sequence.size(); ++k) {
    Y.distances(f(rep.sequence[k]), all, row);
    for (Index y = 0; y < m; ++y) {
      const double b = std::max(0.0, 1.0 - row[y] / rep.radii[k]);
      if (b > v[y].real()) v[y] = b;
    }
  }
  for (Index x : rep.sequence) {
    if (v[g(x)] != Complex(0.0)) {
      throw PreconditionError("bumps reach g(x) at point " + std::to_string(x) + "; thin the sequence");
    }
  }
  rep.phi = SampledFunction(Y.ref(), std::move(v));
  const auto& norms = Y.norms();
  for (int k = 0;; ++k) {
    const double R = std::ldexp(1.0, k);
    if (std::count_if(norms.begin(), norms.end(), [&](double r) { return r > R; }) < 2) break;
    rep.scales.push_back(R);
  }
  for (const auto& w : sublinear_higson_profile(rep.phi, Y, rep.scales)) {
    rep.constants.push_back(w.value);
    rep.max_constant = std::max(rep.max_constant, w.value);
  }
  return rep;
}

// GL+ paths -----------------------------------------------------------------

GlPlusGeodesic::GlPlusGeodesic(const Eigen::MatrixXd& T) : T_(T) {
  if (T.rows() != T.cols() || T.rows() < 1 || T.rows() > 4) {
    throw PreconditionError("need a square matrix of size 1 to 4");
  }
  if (!(T.determinant() > 0)) throw PreconditionError("matrix must have positive determinant");
  const Index n = T.rows();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Q_ = svd.matrixU() * svd.matrixV().transpose();
  S_ = svd.matrixV() * svd.singularValues().asDiagonal() * svd.matrixV().transpose();

  // Q is orthogonal, so its real Schur form is block diagonal with 2x2
  // rotations and +-1 entries.
  Eigen::RealSchur<Eigen::MatrixXd> schur(Q_);
  schur_basis_ = schur.matrixU();
  const Eigen::MatrixXd& R = schur.matrixT();
  std::vector<Index> flips;
  for (Index i = 0; i < n;) {
    if (i + 1 < n && std::abs(R(i + 1, i)) > 1e-12) {
      angles_.push_back({i, std::atan2(R(i + 1, i) - R(i, i + 1), R(i, i) + R(i + 1, i + 1))});
      i += 2;
    } else {
      if (R(i, i) < 0) flips.push_back(i);
      ++i;
    }
  }
  if (flips.size() % 2 != 0) throw PreconditionError("rotation part has an odd number of reflections");
  flip_pairs_.clear();
  for (std::size_t k = 0; k < flips.size(); k += 2) flip_pairs_.push_back({flips[k], flips[k + 1]});

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((S_ + S_.transpose()) / 2);
  stretch_basis_ = eig.eigenvectors();
  stretch_values_ = eig.eigenvalues();

  double theta = flip_pairs_.empty() ? 0.0 : std::numbers::pi;
  for (const auto& [i, a] : angles_) theta = std::max(theta, std::abs(a));
  double log_max = 0, top = 1;
  for (Index i = 0; i < n; ++i) {
    log_max = std::max(log_max, std::abs(std::log(stretch_values_[i])));
    top = std::max(top, stretch_values_[i]);
  }
  speed_ = (theta + log_max) * top;
}

Eigen::MatrixXd GlPlusGeodesic::at(double t) const {
  if (t == 0) return T_;
  const Index n = T_.rows();
  if (t == 1) return Eigen::MatrixXd::Identity(n, n);
  const double s = 1 - t;
  Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
  auto plane = [&](Index i, Index j, double a) {
    rot(i, i) = std::cos(a);
    rot(j, j) = std::cos(a);
    rot(i, j) = -std::sin(a);
    rot(j, i) = std::sin(a);
  };
  for (const auto& [i, a] : angles_) plane(i, i + 1, s * a);
  for (const auto& [i, j] : flip_pairs_) plane(i, j, s * std::numbers::pi);
  const Eigen::MatrixXd Qt = schur_basis_ * rot * schur_basis_.transpose();
  const Eigen::VectorXd powered = stretch_values_.array().pow(s).matrix();
  const Eigen::MatrixXd St = stretch_basis_ * powered.asDiagonal() * stretch_basis_.transpose();
  return Qt * St;
}

namespace {

double spectral_norm(const Eigen::MatrixXd& M) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);
}

}  // namespace

HomotopyPath glplus_path(const Eigen::MatrixXd& T, int steps) {
  if (steps < 2) throw InputError("a path needs at least two samples");
  const GlPlusGeodesic geo(T);
  HomotopyPath path;
  path.T = T;
  path.speed_bound = geo.speed_bound();
  for (int k = 0; k < steps; ++k) {
    const double t = k == steps - 1 ? 1.0 : static_cast<double>(k) / (steps - 1);
    path.t.push_back(t);
    path.theta.push_back(geo.at(t));
    path.determinants.push_back(path.theta.back().determinant());
    if (!(path.determinants.back() > 0)) path.determinants_positive = false;
    if (k > 0) path.max_step = std::max(path.max_step, spectral_norm(path.theta[k] - path.theta[k - 1]));
  }
  const auto I = Eigen::MatrixXd::Identity(T.rows(), T.cols());
  path.endpoints_exact = path.theta.front() == T && path.theta.back() == I;
  return path;
}

SampledSpace homotopy_codomain(const Eigen::MatrixXd& T, double radius, double spacing) {
  const GlPlusGeodesic geo(T);
  const double top = std::max(1.0, geo.stretch().eigenvalues().real().maxCoeff());
  const int dim = static_cast<int>(T.rows());
  return build_euclidean_grid(dim, top * radius + 2 * spacing, dim + 1, 0, spacing);
}

HomotopyReport cone_homotopy_check(const Eigen::MatrixXd& T, const ConeSpace& cone,
                                   const SampledSpace& codomain, const CoarseOptions& options) {
  const CompactGraph& P = cone.p_space();
  const SampledSpace& X = cone.x_space();
  if (P.kind() != "interval") throw PreconditionError("homotopy cone needs an interval factor");
  if (!X.has_coordinates() || X.dimension() != T.rows()) {
    throw PreconditionError("X must be a coordinate sample of the matrix dimension");
  }
  const GlPlusGeodesic geo(T);
  const Index np = P.vertex_count();
  const double length = P.coordinates()(np - 1, 0);
  std::vector<Eigen::MatrixXd> theta;
  for (Index p = 0; p < np; ++p) {
    const double t = p == 0 ? 0.0 : p == np - 1 ? 1.0 : P.coordinates()(p, 0) / length;
    theta.push_back(geo.at(t));
  }
  const auto& xc = X.coordinates();
  const SampledMap H = snap_map(cone, codomain, [&](Index v) -> Eigen::VectorXd {
    return theta[cone.p_of(v)] * xc.row(cone.x_of(v)).transpose();
  });
  HomotopyReport rep;
  rep.coarse = coarse_constant(H, options);
  rep.max_snap = H.max_displacement();
  rep.codomain_mesh = codomain.mesh();
  const auto& yc = codomain.coordinates();
  for (Index x = 0; x < X.size(); ++x) {
    const Eigen::VectorXd p = xc.row(x).transpose();
    rep.endpoint_T_error = std::max(
        rep.endpoint_T_error, (yc.row(H(cone.vertex(0, x))).transpose() - T * p).norm());
    rep.endpoint_I_error =
        std::max(rep.endpoint_I_error, (yc.row(H(cone.vertex(np - 1, x))).transpose() - p).norm());
  }
  rep.endpoints_ok = rep.endpoint_T_error <= rep.codomain_mesh && rep.endpoint_I_error <= rep.codomain_mesh;
  return rep;
}

// Equivalence with R^n --------------------------------------------------------

EquivalenceWitness equivalence_witness_Rn(const EquivalenceSpec& spec) {
  if (spec.n != 2 && spec.n != 3) throw InputError("equivalence witness is available for n = 2, 3");
  EquivalenceWitness w;
  const auto P = build_sphere_graph(spec.n, spec.sphere_mesh);
  w.cone = std::make_shared<const ConeSpace>(
      P, build_halfline(spec.radius, 1), ConeOptions{{ConeAdjacency::Kind::consecutive, 8, 0}});
  w.grid = std::make_shared<const SampledSpace>(build_euclidean_grid(
      spec.n, static_cast<double>(spec.radius), spec.grid_density, 0, spec.grid_spacing));
  const ConeSpace& cone = *w.cone;
  const SampledSpace& grid = *w.grid;
  const auto& pc = cone.p_space().coordinates();

  w.f = std::make_shared<const SampledMap>(snap_map(cone, grid, [&](Index v) -> Eigen::VectorXd {
    return cone.x_space().norm(cone.x_of(v)) * pc.row(cone.p_of(v)).transpose();
  }));

  const NearestIndex directions(pc, cone.p_space().mesh());
  const auto& gc = grid.coordinates();
  std::vector<Index> assign(static_cast<std::size_t>(grid.size()));
  std::vector<double> shift(assign.size());
  for (Index y = 0; y < grid.size(); ++y) {
    const double r = grid.norm(y);
    if (r == 0) {
      assign[y] = cone.vertex(0, 0);
      continue;
    }
    const Eigen::VectorXd dir = gc.row(y).transpose() / r;
    const auto [p, chord] = directions.nearest(dir);
    const Index k = std::min<Index>(std::llround(r), spec.radius);
    assign[y] = cone.vertex(p, k);
    shift[y] = std::abs(static_cast<double>(k) - r) + std::max(1.0, r) * 2 * std::asin(std::min(1.0, chord / 2));
  }
  w.g = std::make_shared<const SampledMap>(grid, cone, std::move(assign), std::move(shift));

  w.f_report = coarse_constant(*w.f);
  w.g_report = coarse_constant(*w.g);
  const SampledMap fg = compose(*w.f, *w.g);
  const SampledMap gf = compose(*w.g, *w.f);
  w.fg_report = closeness(fg, identity_map(grid));
  w.gf_report = closeness(gf, identity_map(cone));
  w.fg_displacement = w.fg_report.max_distance;
  w.gf_displacement = w.gf_report.max_distance;
  const double h = grid.mesh(), mp = cone.p_space().mesh();
  w.p_diameter = cone.p_space().diameter();
  w.fg_excess = -kInf;
  for (Index y = 0; y < grid.size(); ++y) {
    const double allowed = 1 + h + mp * std::max(1.0, grid.norm(y));
    w.fg_excess = std::max(w.fg_excess, grid.distance(fg(y), y) - allowed);
  }
  w.gf_excess = -kInf;
  for (Index v = 0; v < cone.size(); ++v) {
    const double k = cone.x_space().norm(cone.x_of(v));
    const double d = cone.distance(gf(v), v);
    if (k == 0) {
      w.gf_base_displacement = std::max(w.gf_base_displacement, d);
      continue;
    }
    w.gf_excess = std::max(w.gf_excess, d - (1 + h + mp * std::max(1.0, k)));
  }
  return w;
}

// JSON ----------------------------------------------------------------------

Json to_json(const CoarseMapReport& r) {
  return {{"A_lower", r.A_lower},
          {"coarse", r.coarse},
          {"A_properness", r.A_properness},
          {"A_lipschitz", r.A_lipschitz},
          {"properness_witness", r.properness_witness},
          {"lipschitz_witness", {r.lipschitz_witness.first, r.lipschitz_witness.second}},
          {"violations_below", r.violations_below},
          {"annuli", r.annuli},
          {"annulus_requirement", r.annulus_requirement},
          {"requirement_slope", r.requirement_slope},
          {"pairs_checked", r.pairs_checked}};
}

Json to_json(const ClosenessReport& r) {
  return {{"eps", r.eps},
          {"C_eps", r.C_eps},
          {"annuli", r.annuli},
          {"annulus_ratio", r.annulus_ratio},
          {"ratio_slope", r.ratio_slope},
          {"max_distance", r.max_distance},
          {"max_witness", r.max_witness},
          {"sublinearly_close", r.sublinearly_close}};
}

}  // namespace corona
