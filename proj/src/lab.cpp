#include "corona/lab.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>

#include "corona/maps.hpp"
#include "corona/smoothing.hpp"
#include "corona/tensor.hpp"

namespace corona {

namespace {

// Typed access to one config object. Unread keys are schema violations.
class Params {
 public:
  Params(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    return j_.contains(key) ? as<T>(key) : fallback;
  }

  template <typename T>
  T need(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing '" + key + "'");
    return as<T>(key);
  }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(where_ + ": missing '" + key + "'");
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.contains(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  template <typename T>
  T as(const std::string& key) const {
    const Json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where_ + ": '" + key + "' must be true or false");
    } else if constexpr (std::is_same_v<T, double> || std::is_integral_v<T>) {
      if (!v.is_number()) throw ConfigError(where_ + ": '" + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where_ + ": '" + key + "' must be a string");
    }
    try {
      return v.get<T>();
    } catch (const Json::exception&) {
      throw ConfigError(where_ + ": '" + key + "' has the wrong type");
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> used_;
};

Json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Json nums(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

void fail(LabResult& res, const std::string& why) {
  res.failures.push_back(why);
  res.exit_code = 1;
}

// Builders -------------------------------------------------------------------

SampledSpace make_space(const Json& j, const std::string& where) {
  Params p(j, where);
  const auto kind = p.need<std::string>("kind");
  SampledSpace s;
  if (kind == "halfline") {
    s = build_halfline(p.need<Index>("n_max"), p.get<double>("step", 1.0));
  } else if (kind == "grid") {
    s = build_euclidean_grid(p.need<int>("dim"), p.need<double>("max_radius"), p.need<int>("density"),
                             p.get<std::uint64_t>("seed", 0), p.get<double>("max_spacing", 1.0));
  } else if (kind == "cloud") {
    const auto pts = p.need<std::vector<std::vector<double>>>("points");
    if (pts.empty() || pts.front().empty()) throw ConfigError(where + ": empty point cloud");
    Eigen::MatrixXd c(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(pts.front().size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != pts.front().size()) throw ConfigError(where + ": ragged point cloud");
      for (std::size_t k = 0; k < pts[i].size(); ++k) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pts[i][k];
    }
    s = build_point_cloud(c, p.get<Index>("base", 0), p.get<double>("C", 1.0));
  } else {
    throw ConfigError(where + ": unknown space kind '" + kind + "'");
  }
  p.finish();
  return s;
}

CompactGraph make_p(const Json& j, const std::string& where) {
  Params p(j, where);
  const auto kind = p.need<std::string>("kind");
  CompactGraph g;
  if (kind == "interval") {
    g = build_interval(p.need<double>("mesh"), p.get<double>("length", 1.0));
  } else if (kind == "sphere") {
    g = build_sphere_graph(p.get<int>("dim", 2), p.need<double>("mesh"));
  } else if (kind == "point") {
    g = build_point_graph();
  } else {
    throw ConfigError(where + ": unknown P kind '" + kind + "'");
  }
  p.finish();
  return g;
}

ConeOptions make_cone_options(Params& p, const SampledSpace& X) {
  ConeOptions o;
  o.adjacency.kind = X.is_line() ? ConeAdjacency::Kind::consecutive : ConeAdjacency::Kind::nearest;
  if (p.has("adjacency")) {
    Params a(p.raw("adjacency"), p.where() + ".adjacency");
    const auto kind = a.need<std::string>("kind");
    if (kind == "consecutive") {
      o.adjacency.kind = ConeAdjacency::Kind::consecutive;
    } else if (kind == "nearest") {
      o.adjacency.kind = ConeAdjacency::Kind::nearest;
    } else if (kind == "radius") {
      o.adjacency.kind = ConeAdjacency::Kind::radius;
    } else {
      throw ConfigError(a.where() + ": unknown adjacency '" + kind + "'");
    }
    o.adjacency.k = a.get<int>("k", 8);
    o.adjacency.radius = a.get<double>("radius", 0.0);
    a.finish();
  }
  o.max_vertices = p.get<Index>("max_vertices", o.max_vertices);
  return o;
}

std::vector<double> make_scales(Params& p, const std::string& key) {
  const Json& j = p.raw(key);
  if (j.is_array()) {
    try {
      return j.get<std::vector<double>>();
    } catch (const Json::exception&) {
      throw ConfigError(p.where() + ": '" + key + "' must be numbers");
    }
  }
  Params s(j, p.where() + "." + key);
  const auto out = dyadic_scales(s.need<int>("lo"), s.need<int>("hi"));
  s.finish();
  return out;
}

SampledFunction make_function(const Json& j, const SampledSpace& X, const std::string& where) {
  Params p(j, where);
  const auto name = p.need<std::string>("name");
  auto radial = [&](auto h) { return SampledFunction::tabulate(X, [&](Index x) { return h(X.norm(x)); }); };
  SampledFunction f;
  if (name == "constant") {
    f = SampledFunction::constant(X, p.get<double>("value", 1.0));
  } else if (name == "ratio") {
    f = radial([](double r) { return Complex(r / (1 + r)); });
  } else if (name == "inverse") {
    f = radial([](double r) { return Complex(1 / (1 + r)); });
  } else if (name == "sin_log") {
    f = radial([](double r) { return Complex(std::sin(std::log1p(r))); });
  } else if (name == "exp_i_log") {
    f = radial([](double r) { return std::exp(Complex(0, std::log1p(r))); });
  } else if (name == "sqrt") {
    f = sqrt_function(X, p.need<double>("s"));
  } else if (name == "circle_sqrt") {
    f = circle_sqrt_function(X, p.need<double>("s"));
  } else if (name == "bump") {
    const auto fam = bump_family(X, p.need<int>("count"));
    const auto k = p.need<std::size_t>("index");
    if (k >= fam.bumps.size()) throw ConfigError(where + ": bump index out of range");
    f = fam.bumps[k];
  } else if (name == "psi_P") {
    const auto fam = bump_family(X, p.need<int>("count"));
    const auto sel = p.need<std::vector<int>>("selector");
    f = psi_P(sel, fam);
  } else if (name == "step") {
    f = SampledFunction::tabulate(X, [](Index x) { return x % 2 == 0 ? 1.0 : 0.0; });
  } else if (name == "disk") {
    if (!X.has_coordinates()) throw ConfigError(where + ": disk needs coordinates");
    const auto c = p.get<Eigen::Index>("component", 0);
    if (c < 0 || c >= X.dimension()) throw ConfigError(where + ": component out of range");
    f = SampledFunction::tabulate(X, [&](Index x) { return X.coordinates()(x, c) / (1 + X.norm(x)); });
  } else if (name == "noise") {
    const auto eta = hash_noise(X, p.get<std::uint64_t>("seed", 0), p.need<double>("amplitude"));
    f = p.has("base") ? make_function(p.raw("base"), X, where + ".base") + eta : eta;
  } else {
    throw ConfigError(where + ": unknown function '" + name + "'");
  }
  p.finish();
  return f;
}

double p_angle(const CompactGraph& P, Index v) {
  const auto& c = P.coordinates();
  if (c.cols() >= 2) return std::atan2(c(v, 1), c(v, 0));
  return c(v, 0);
}

SampledFunction make_p_function(const Json& j, const CompactGraph& P, const SampledSpace& PS,
                                const std::string& where) {
  Params p(j, where);
  const auto name = p.need<std::string>("name");
  SampledFunction f;
  if (name == "constant") {
    f = SampledFunction::constant(PS, p.get<double>("value", 1.0));
  } else if (name == "cos" || name == "sin") {
    const double k = p.get<double>("k", 1.0);
    const bool c = name == "cos";
    f = SampledFunction::tabulate(PS, [&](Index v) {
      return c ? std::cos(k * p_angle(P, v)) : std::sin(k * p_angle(P, v));
    });
  } else if (name == "shifted_cos") {
    const double s = p.get<double>("shift", 1.0);
    f = SampledFunction::tabulate(PS, [&](Index v) { return 0.5 * (1 + std::cos(p_angle(P, v) - s)); });
  } else if (name == "height") {
    f = SampledFunction::tabulate(PS, [&](Index v) { return P.coordinates()(v, 0); });
  } else {
    throw ConfigError(where + ": unknown P function '" + name + "'");
  }
  p.finish();
  return f;
}

Json metric_json(const MetricReport& m) {
  return {{"passed", m.passed},
          {"triples_checked", m.triples_checked},
          {"worst_triangle_excess", num(m.worst_triangle_excess)},
          {"worst_asymmetry", num(m.worst_asymmetry)},
          {"worst_self_distance", num(m.worst_self_distance)},
          {"witness", m.witness}};
}

Table requirement_table(const CoarseMapReport& r) {
  Table t{{"annulus", "requirement"}, {}};
  for (std::size_t k = 0; k < r.annuli.size(); ++k) t.rows.push_back({r.annuli[k], num(r.annulus_requirement[k])});
  return t;
}

Table closeness_table(const ClosenessReport& r) {
  Table t{{"annulus", "ratio"}, {}};
  for (std::size_t k = 0; k < r.annuli.size(); ++k) t.rows.push_back({r.annuli[k], num(r.annulus_ratio[k])});
  return t;
}

Table eps_table(const ClosenessReport& r) {
  Table t{{"eps", "C_eps"}, {}};
  for (std::size_t k = 0; k < r.eps.size(); ++k) t.rows.push_back({num(r.eps[k]), num(r.C_eps[k])});
  return t;
}

// Experiments ----------------------------------------------------------------

LabResult build_space_cmd(Params& p) {
  LabResult res;
  const auto X = make_space(p.raw("space"), "space");
  const bool metric = p.get<bool>("metric_check", true);
  const auto triples = p.get<Index>("max_triples", 2'000'000);
  const auto trials = p.get<Index>("quasi_geodesic_trials", 200);
  const auto seed = p.get<std::uint64_t>("seed", 0);
  p.finish();
  res.summary["ref"] = X.ref();
  res.summary["size"] = X.size();
  res.summary["mesh"] = num(X.mesh());
  res.summary["max_norm"] = num(X.max_norm());
  res.summary["quasi_geodesic_constant"] = num(X.quasi_geodesic_constant());
  if (metric) {
    const auto m = validate_metric(X, 1e-9, triples, seed);
    res.summary["metric"] = metric_json(m);
    if (!m.passed) fail(res, "metric axioms fail");
  }
  if (trials > 0) {
    const auto q = quasi_geodesic_check(X, X.quasi_geodesic_constant(), trials, seed);
    res.summary["quasi_geodesic"] = {{"passed", q.passed},
                                     {"pairs_checked", q.pairs_checked},
                                     {"worst_violation", num(q.worst_violation)},
                                     {"witness", {q.witness.first, q.witness.second}}};
    if (!q.passed) fail(res, "quasi-geodesic check fails");
  }
  Table t{{"annulus", "count"}, {}};
  for (const auto& [k, members] : X.annuli()) {
    t.rows.push_back({k == kCoreAnnulus ? Json("core") : Json(k), static_cast<Index>(members.size())});
  }
  res.tables["annuli"] = std::move(t);
  return res;
}

LabResult cone_distance_cmd(Params& p) {
  LabResult res;
  const auto P = make_p(p.raw("p"), "p");
  const auto X = make_space(p.raw("x"), "x");
  const auto options = make_cone_options(p, X);
  const ConeSpace cone(P, X, options);
  res.summary["ref"] = cone.ref();
  res.summary["vertices"] = cone.size();
  res.summary["x_edges"] = cone.x_edge_count();

  const double probe_R = p.get<double>("probe_R", 0.0);
  Table d{{"p_id", "x_id", "p2_id", "x2_id", "d_cone", "d_X", "lower_bound_R", "margin"}, {}};
  if (p.has("pairs")) {
    std::vector<std::array<Index, 4>> pairs;
    try {
      for (const auto& e : p.raw("pairs")) pairs.push_back({e.at(0).at(0), e.at(0).at(1), e.at(1).at(0), e.at(1).at(1)});
    } catch (const Json::exception&) {
      throw ConfigError("pairs must look like [[p, x], [p2, x2]]");
    }
    for (const auto& [a, b, c, e] : pairs) {
      if (a < 0 || c < 0 || a >= P.vertex_count() || c >= P.vertex_count() || b < 0 || e < 0 || b >= X.size() ||
          e >= X.size()) {
        throw ConfigError("pair ids out of range");
      }
      const double dc = cone_distance(cone, {a, b}, {c, e});
      const double dx = X.distance(b, e);
      const double lb = dx + probe_R * P.distance(a, c);
      d.rows.push_back({a, b, c, e, num(dc), num(dx), num(lb), num(dc - lb)});
    }
  }
  res.tables["distances"] = std::move(d);

  if (p.get<bool>("check_factor", false)) {
    if (P.vertex_count() != 1) throw ConfigError("check_factor needs a one-point P");
    Index mismatches = 0;
    for (Index a = 0; a < X.size(); ++a)
      for (Index b = a + 1; b < X.size(); ++b)
        if (cone.distance(a, b) != X.distance(a, b)) ++mismatches;
    res.summary["factor_mismatches"] = mismatches;
    if (mismatches > 0) fail(res, "cone over a point differs from d_X");
  }
  if (p.has("lower_bound")) {
    Params lb(p.raw("lower_bound"), "lower_bound");
    const auto rep = verify_lower_bound(cone, lb.need<double>("R"), lb.get<double>("tolerance", -1.0));
    lb.finish();
    res.summary["lower_bound"] = {{"R", num(rep.R)},
                                  {"tolerance", num(rep.tolerance)},
                                  {"pairs_checked", rep.pairs_checked},
                                  {"passed", rep.passed},
                                  {"worst_margin", num(rep.worst_margin)},
                                  {"witness", {rep.witness.first, rep.witness.second}},
                                  {"literal_worst_margin", num(rep.literal_worst_margin)},
                                  {"literal_violations", rep.literal_violations}};
    if (!rep.passed) fail(res, "lower bound fails");
  }
  if (p.has("refinement")) {
    Params r(p.raw("refinement"), "refinement");
    RefinementSpec spec;
    spec.p_kind = r.get<std::string>("p_kind", spec.p_kind);
    spec.p_mesh = r.get<double>("p_mesh", spec.p_mesh);
    spec.p_length = r.get<double>("p_length", spec.p_length);
    spec.sphere_dim = r.get<int>("sphere_dim", spec.sphere_dim);
    spec.x_extent = r.get<double>("x_extent", spec.x_extent);
    spec.x_step = r.get<double>("x_step", spec.x_step);
    spec.levels = r.get<int>("levels", spec.levels);
    spec.options.max_vertices = r.get<Index>("max_vertices", spec.options.max_vertices);
    const double max_final = r.get<double>("max_final_change", 0.05);
    try {
      for (const auto& e : r.raw("probes")) spec.probes.push_back({{e.at(0).at(0), e.at(0).at(1)}, {e.at(1).at(0), e.at(1).at(1)}});
    } catch (const Json::exception&) {
      throw ConfigError("refinement probes must look like [[p, x], [p2, x2]]");
    }
    r.finish();
    const auto rep = refinement_convergence(spec);
    res.summary["refinement"] = {{"vertex_counts", rep.vertex_counts},
                                 {"max_change", nums(rep.max_change)},
                                 {"final_change", num(rep.final_change)},
                                 {"monotone", rep.monotone},
                                 {"complete", rep.complete},
                                 {"note", rep.note}};
    Table t{{"probe", "level", "distance"}, {}};
    for (std::size_t k = 0; k < rep.distances.size(); ++k)
      for (std::size_t l = 0; l < rep.distances[k].size(); ++l)
        t.rows.push_back({static_cast<Index>(k), static_cast<Index>(l), num(rep.distances[k][l])});
    res.tables["refinement"] = std::move(t);
    if (!rep.complete) fail(res, "refinement incomplete: " + rep.note);
    if (!rep.monotone) fail(res, "refinement not monotone");
    if (!(rep.final_change < max_final)) fail(res, "refinement final change too large");
  }
  p.finish();
  return res;
}

LabResult classify_cmd(Params& p) {
  LabResult res;
  const auto X = make_space(p.raw("space"), "space");
  const auto f = make_function(p.raw("function"), X, "function");
  const auto scales = make_scales(p, "scales");
  ClassifyOptions o;
  o.slope_threshold = p.get<double>("slope_threshold", o.slope_threshold);
  o.modulus_decay = p.get<double>("modulus_decay", o.modulus_decay);
  o.tail_fraction = p.get<double>("tail_fraction", o.tail_fraction);
  o.classical_radius = p.get<double>("classical_radius", o.classical_radius);
  const auto expect = p.get<std::string>("expect", "");
  p.finish();
  const auto rep = classify(f, X, scales, o);
  res.summary["classification"] = to_string(rep.classification);
  res.summary["slope"] = num(rep.slope);
  res.summary["slope_from"] = rep.slope_from;
  res.summary["classical_radius"] = num(rep.classical_radius);
  res.summary["space_ref"] = X.ref();
  Table t{{"R", "C", "i", "j", "coverage", "classical", "center"}, {}};
  for (std::size_t k = 0; k < rep.scales.size(); ++k) {
    const auto& c = rep.constants[k];
    const auto& m = rep.classical[k];
    t.rows.push_back({num(rep.scales[k]), num(c.value), c.i, c.j, num(c.coverage), num(m.value), m.center});
  }
  res.tables["constants"] = std::move(t);
  if (!expect.empty() && expect != to_string(rep.classification)) {
    fail(res, "expected " + expect + ", got " + to_string(rep.classification));
  }
  return res;
}

LabResult smooth_verify_cmd(Params& p) {
  LabResult res;
  const auto X = make_space(p.raw("space"), "space");
  const auto f = make_function(p.raw("function"), X, "function");
  const double r = p.need<double>("r");
  const double C_X = p.get<double>("C_X", X.quasi_geodesic_constant());
  const auto scales = make_scales(p, "scales");
  AppendixOptions o;
  o.relative_tolerance = p.get<double>("relative_tolerance", o.relative_tolerance);
  o.decay_slope = p.get<double>("decay_slope", o.decay_slope);
  p.finish();
  const auto cover = greedy_net_cover(X, r);
  const auto pou = hat_partition(cover, X);
  const auto g = smooth(f, pou, cover);
  const auto rep = verify_appendix_bound(f, g, cover, pou, X, C_X, scales, o);
  res.summary = {{"N", rep.N},
                 {"D", num(rep.D)},
                 {"d", num(rep.d)},
                 {"L", num(cover.lebesgue_L)},
                 {"C_f", num(rep.C_f)},
                 {"C_X", num(rep.C_X)},
                 {"bound", num(rep.bound)},
                 {"documented_D_bound", num(pou.documented_bound)},
                 {"skipped_scales", nums(rep.skipped_scales)},
                 {"decay_slope", num(rep.decay_slope)},
                 {"bound_pass", rep.bound_pass},
                 {"decay_pass", rep.decay_pass}};
  Table m{{"R", "C_g", "bound", "margin", "pass"}, {}};
  for (const auto& row : rep.rows) m.rows.push_back({num(row.R), num(row.C_g), num(row.bound), num(row.margin), row.pass});
  res.tables["margins"] = std::move(m);
  Table a{{"annulus", "sup_f_minus_g"}, {}};
  for (std::size_t k = 0; k < rep.annuli.size(); ++k) a.rows.push_back({rep.annuli[k], num(rep.annulus_sups[k])});
  res.tables["decay"] = std::move(a);
  if (!rep.bound_pass) fail(res, "smoothing bound exceeded");
  if (!rep.decay_pass) fail(res, "f - g does not decay");
  return res;
}

SampledMap make_map(const Json& j, const SampledSpace& X, const SampledSpace& Y, const std::string& where) {
  Params p(j, where);
  const auto kind = p.need<std::string>("kind");
  auto coords = [&](Index x) -> Eigen::VectorXd {
    if (!X.has_coordinates()) throw ConfigError(where + ": map needs domain coordinates");
    return X.coordinates().row(x).transpose();
  };
  std::optional<SampledMap> m;
  if (kind == "identity") {
    if (X.ref() != Y.ref()) throw ConfigError(where + ": identity needs codomain = domain");
    m = identity_map(X);
  } else if (kind == "constant") {
    m = SampledMap(X, Y, std::vector<Index>(static_cast<std::size_t>(X.size()), Y.base_point()));
  } else if (kind == "scale") {
    const double c = p.need<double>("factor");
    m = snap_map(X, Y, [&](Index x) -> Eigen::VectorXd { return c * coords(x); });
  } else if (kind == "root_shift") {
    const double a = p.get<double>("a", 1.0);
    m = snap_map(X, Y, [&](Index x) -> Eigen::VectorXd {
      const double r = X.norm(x);
      return r > 0 ? Eigen::VectorXd(coords(x) * (1 + a / std::sqrt(r))) : coords(x);
    });
  } else {
    throw ConfigError(where + ": unknown map kind '" + kind + "'");
  }
  p.finish();
  return *m;
}

LabResult check_map_cmd(Params& p) {
  LabResult res;
  const auto X = make_space(p.raw("domain"), "domain");
  const auto Y = p.has("codomain") ? make_space(p.raw("codomain"), "codomain") : X;
  const auto f = make_map(p.raw("map"), X, Y, "map");
  CoarseOptions o;
  o.max_A = p.get<double>("max_A", o.max_A);
  o.slope_threshold = p.get<double>("slope_threshold", o.slope_threshold);
  const auto rep = coarse_constant(f, o);
  res.summary["coarse"] = to_json(rep);
  res.summary["max_snap"] = num(f.max_displacement());
  res.tables["requirement"] = requirement_table(rep);
  if (!rep.coarse) {
    fail(res, "not coarse: requirement slope " + Json(rep.requirement_slope).dump() + ", witness point " +
                  std::to_string(rep.properness_witness));
  }
  if (p.has("compare")) {
    const auto g = make_map(p.raw("compare"), X, Y, "compare");
    const auto c = closeness(f, g);
    res.summary["closeness"] = to_json(c);
    res.tables["closeness"] = closeness_table(c);
    res.tables["eps"] = eps_table(c);
    if (p.has("expect_close") && p.get<bool>("expect_close", true) != c.sublinearly_close) {
      fail(res, "closeness verdict differs from expectation");
    }
  }
  p.finish();
  return res;
}

Eigen::MatrixXd make_matrix(const Json& j) {
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const Json::exception&) {
    throw ConfigError("matrix must be a list of rows");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd T(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) throw ConfigError("matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) T(i, k) = rows[i][k];
  }
  return T;
}

LabResult homotopy_cmd(Params& p) {
  LabResult res;
  const auto T = make_matrix(p.raw("matrix"));
  const int steps = p.get<int>("steps", 64);
  const double p_mesh = p.get<double>("p_mesh", 0.25);
  const auto X = make_space(p.raw("x"), "x");
  const double spacing = p.get<double>("codomain_spacing", 1.0);
  const double max_A = p.get<double>("max_A", 6.0);
  const auto options = make_cone_options(p, X);
  p.finish();
  const auto path = glplus_path(T, steps);
  Table t{{"k", "t", "det"}, {}};
  for (std::size_t k = 0; k < path.t.size(); ++k) t.rows.push_back({static_cast<Index>(k), num(path.t[k]), num(path.determinants[k])});
  res.tables["path"] = std::move(t);
  res.summary["path"] = {{"speed_bound", num(path.speed_bound)},
                         {"max_step", num(path.max_step)},
                         {"determinants_positive", path.determinants_positive},
                         {"endpoints_exact", path.endpoints_exact}};
  if (!path.determinants_positive) fail(res, "determinant leaves GL+");
  if (!path.endpoints_exact) fail(res, "endpoints are not exact");

  const ConeSpace cone(build_interval(p_mesh), X, options);
  const auto Y = homotopy_codomain(T, X.max_norm(), spacing);
  const auto rep = cone_homotopy_check(T, cone, Y);
  res.summary["cone_vertices"] = cone.size();
  res.summary["codomain_size"] = Y.size();
  res.summary["coarse"] = to_json(rep.coarse);
  res.summary["endpoint_T_error"] = num(rep.endpoint_T_error);
  res.summary["endpoint_I_error"] = num(rep.endpoint_I_error);
  res.summary["max_snap"] = num(rep.max_snap);
  res.summary["endpoints_ok"] = rep.endpoints_ok;
  res.tables["requirement"] = requirement_table(rep.coarse);
  if (!rep.endpoints_ok) fail(res, "endpoint slices are off");
  if (!rep.coarse.coarse) fail(res, "homotopy is not coarse");
  if (rep.coarse.A_lower > max_A) fail(res, "A_lower above " + Json(max_A).dump());
  return res;
}

LabResult equivalence_cmd(Params& p) {
  LabResult res;
  EquivalenceSpec spec;
  spec.n = p.get<int>("n", spec.n);
  spec.radius = p.get<Index>("radius", spec.radius);
  spec.sphere_mesh = p.get<double>("sphere_mesh", spec.sphere_mesh);
  spec.grid_spacing = p.get<double>("grid_spacing", spec.grid_spacing);
  spec.grid_density = p.get<int>("grid_density", spec.grid_density);
  const double max_A = p.get<double>("max_A", 3.0);
  p.finish();
  const auto w = equivalence_witness_Rn(spec);
  res.summary = {{"cone_vertices", w.cone->size()},
                 {"grid_points", w.grid->size()},
                 {"sphere_mesh", num(w.cone->p_space().mesh())},
                 {"f", to_json(w.f_report)},
                 {"g", to_json(w.g_report)},
                 {"f_after_g", to_json(w.fg_report)},
                 {"g_after_f", to_json(w.gf_report)},
                 {"fg_displacement", num(w.fg_displacement)},
                 {"gf_displacement", num(w.gf_displacement)},
                 {"fg_excess", num(w.fg_excess)},
                 {"gf_excess", num(w.gf_excess)},
                 {"gf_base_displacement", num(w.gf_base_displacement)},
                 {"p_diameter", num(w.p_diameter)}};
  res.tables["requirement_f"] = requirement_table(w.f_report);
  res.tables["requirement_g"] = requirement_table(w.g_report);
  res.tables["closeness_fg"] = closeness_table(w.fg_report);
  res.tables["closeness_gf"] = closeness_table(w.gf_report);
  if (!w.passed()) fail(res, "equivalence witness fails");
  if (w.f_report.A_lower > max_A || w.g_report.A_lower > max_A) fail(res, "A_lower above " + Json(max_A).dump());
  return res;
}

LabResult tensor_cmd(Params& p) {
  LabResult res;
  const auto P = make_p(p.raw("p"), "p");
  const auto X = make_space(p.raw("x"), "x");
  const auto options = make_cone_options(p, X);
  const auto scales = make_scales(p, "scales");
  const double tol = p.get<double>("relative_tolerance", 0.1);
  const ConeSpace cone(P, X, options);
  const auto PS = space_from_graph(P);
  std::vector<SampledFunction> phis, psis;
  const Json& phi_specs = p.raw("phis");
  const Json& psi_specs = p.raw("psis");
  if (!phi_specs.is_array() || !psi_specs.is_array()) throw ConfigError("phis and psis must be lists");
  for (std::size_t i = 0; i < phi_specs.size(); ++i) phis.push_back(make_p_function(phi_specs[i], P, PS, "phis[" + std::to_string(i) + "]"));
  for (std::size_t i = 0; i < psi_specs.size(); ++i) psis.push_back(make_function(psi_specs[i], X, "psis[" + std::to_string(i) + "]"));

  Table om{{"phi", "psi", "R", "measured", "bound", "margin", "pass"}, {}};
  Table la{{"phi", "psi", "modulus", "shell_modulus", "C_global", "C_unit", "pass"}, {}};
  double worst_ratio = 0;
  Index omega_fail = 0, lambda_fail = 0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (std::size_t k = 0; k < psis.size(); ++k) {
      const auto rep = omega_bound_check(phis[i], psis[k], cone, PS, scales, tol);
      for (const auto& row : rep.rows) {
        om.rows.push_back({static_cast<Index>(i), static_cast<Index>(k), num(row.R), num(row.measured),
                           num(row.bound), num(row.margin), row.pass});
        if (row.bound > 0) worst_ratio = std::max(worst_ratio, row.measured / row.bound);
      }
      if (!rep.pass) ++omega_fail;
      const auto lr = lambda(omega(phis[i], psis[k], cone), cone);
      la.rows.push_back({static_cast<Index>(i), static_cast<Index>(k), num(lr.family.modulus),
                         num(lr.shell_modulus), num(lr.C_global), num(lr.C_unit), lr.pass});
      if (!lr.pass) ++lambda_fail;
    }
  }
  res.tables["omega"] = std::move(om);
  res.tables["lambda"] = std::move(la);
  res.summary["cone_vertices"] = cone.size();
  res.summary["omega_worst_ratio"] = num(worst_ratio);
  res.summary["omega_failures"] = omega_fail;
  res.summary["lambda_failures"] = lambda_fail;
  if (omega_fail > 0) fail(res, "omega bound fails for " + std::to_string(omega_fail) + " products");
  if (lambda_fail > 0) fail(res, "lambda modulus bound fails for " + std::to_string(lambda_fail) + " products");

  if (p.get<bool>("roundtrip", true) && !phis.empty() && !psis.empty()) {
    std::vector<std::pair<SampledFunction, SampledFunction>> terms;
    for (std::size_t i = 0; i < std::min(phis.size(), psis.size()); ++i) terms.emplace_back(phis[i], psis[i]);
    const auto rt = roundtrip(terms, cone);
    res.summary["roundtrip_residual"] = num(rt.residual);
    if (!rt.pass) fail(res, "roundtrip residual above 1e-12");
  }

  if (p.has("psi_approx")) {
    Params a(p.raw("psi_approx"), "psi_approx");
    const auto I = build_interval(a.get<double>("p_mesh", 1.0 / 256));
    const auto Xa = make_space(a.raw("x"), "psi_approx.x");
    const auto psi0 = make_function(a.raw("psi0"), Xa, "psi_approx.psi0");
    const auto ns = a.get<std::vector<int>>("n", {4, 8, 16});
    const double halving = a.get<double>("halving_tolerance", 0.1);
    a.finish();
    Table t{{"family", "n", "error", "bound", "ratio", "pass"}, {}};
    for (const std::string name : {"linear", "smooth"}) {
      std::vector<SampledFunction> slices;
      for (Index v = 0; v < I.vertex_count(); ++v) {
        const double s = I.coordinates()(v, 0);
        const double h = name == "linear" ? s : std::sin(std::numbers::pi * s / 2);
        slices.push_back(Complex(h) * psi0);
      }
      const auto fam = make_family(I, std::move(slices));
      double prev = kInf;
      for (int n : ns) {
        const auto rep = psi_approx(fam, I, n);
        const double ratio = std::isfinite(prev) && prev > 0 ? rep.error / prev : 0.0;
        t.rows.push_back({name, n, num(rep.error), num(rep.bound), num(ratio), rep.pass});
        if (!rep.pass) fail(res, name + " family exceeds modulus / n at n = " + std::to_string(n));
        if (rep.error > prev) fail(res, name + " error grows at n = " + std::to_string(n));
        if (name == "smooth" && std::isfinite(prev) && std::abs(ratio - 0.5) > 0.5 * halving) {
          fail(res, "doubling n does not halve the smooth error at n = " + std::to_string(n));
        }
        prev = rep.error;
      }
    }
    res.tables["psi_approx"] = std::move(t);
  }
  p.finish();
  return res;
}

}  // namespace

std::vector<std::string> lab_subcommands() {
  return {"build-space", "cone-distance", "classify-function", "smooth-verify",
          "check-map",   "homotopy",      "equivalence-rn",    "tensor-check"};
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LabResult run_experiment(const std::string& subcommand, const Json& config) {
  Params p(config, "config");
  LabResult res;
  if (subcommand == "build-space") {
    res = build_space_cmd(p);
  } else if (subcommand == "cone-distance") {
    res = cone_distance_cmd(p);
  } else if (subcommand == "classify-function") {
    res = classify_cmd(p);
  } else if (subcommand == "smooth-verify") {
    res = smooth_verify_cmd(p);
  } else if (subcommand == "check-map") {
    res = check_map_cmd(p);
  } else if (subcommand == "homotopy") {
    res = homotopy_cmd(p);
  } else if (subcommand == "equivalence-rn") {
    res = equivalence_cmd(p);
  } else if (subcommand == "tensor-check") {
    res = tensor_cmd(p);
  } else {
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  }
  return res;
}

std::string format_cell(const Json& v) {
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isnan(d)) return "nan";
    if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    return buf;
  }
  if (v.is_number_integer()) return v.dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

std::string table_csv(const Table& t, const std::string& header_comment) {
  std::string out = header_comment + "\n";
  for (std::size_t k = 0; k < t.columns.size(); ++k) out += (k ? "," : "") + t.columns[k];
  out += "\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + format_cell(row[k]);
    out += "\n";
  }
  return out;
}

void write_outputs(const LabResult& result, const std::string& subcommand, const Json& config,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto hash = config_hash(config);
  const std::string comment = "# schema_version=" + std::to_string(kSchemaVersion) + " config_hash=" + hash;
  Json summary = {{"schema_version", kSchemaVersion},
                  {"config_hash", hash},
                  {"subcommand", subcommand},
                  {"exit_code", result.exit_code},
                  {"failures", result.failures},
                  {"config", config},
                  {"result", result.summary}};
  Json tables = Json::array();
  for (const auto& [name, t] : result.tables) tables.push_back(name + ".csv");
  summary["tables"] = std::move(tables);
  {
    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) throw ResourceError("cannot write " + (out_dir / "summary.json").string());
    out << summary.dump(2) << "\n";
  }
  for (const auto& [name, t] : result.tables) {
    std::ofstream out(out_dir / (name + ".csv"), std::ios::binary);
    if (!out) throw ResourceError("cannot write " + (out_dir / (name + ".csv")).string());
    out << table_csv(t, comment);
  }
}

}  // namespace corona
