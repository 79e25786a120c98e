#pragma once

#include <functional>
#include <memory>

#include <Eigen/Dense>

#include "corona/cone.hpp"
#include "corona/functions.hpp"

namespace corona {

/// A map between finite samples: one codomain id per domain id. Both spaces
/// are borrowed and must outlive the map.
class SampledMap {
 public:
  SampledMap(const MetricSpace& domain, const MetricSpace& codomain, std::vector<Index> assignment,
             std::vector<double> displacement = {});

  const MetricSpace& domain() const { return *domain_; }
  const MetricSpace& codomain() const { return *codomain_; }
  const std::vector<Index>& assignment() const { return assignment_; }
  Index operator()(Index x) const { return assignment_[x]; }
  Index size() const { return static_cast<Index>(assignment_.size()); }
  /// Snapping displacement per domain point (zero for exact assignments).
  const std::vector<double>& displacement() const { return displacement_; }
  double max_displacement() const;

 private:
  const MetricSpace* domain_;
  const MetricSpace* codomain_;
  std::vector<Index> assignment_;
  std::vector<double> displacement_;
};

/// Sends x to the codomain sample point nearest to `target(x)`.
SampledMap snap_map(const MetricSpace& domain, const SampledSpace& codomain,
                    const std::function<Eigen::VectorXd(Index)>& target);

SampledMap identity_map(const MetricSpace& space);
/// g o f.
SampledMap compose(const SampledMap& g, const SampledMap& f);
/// phi o f.
SampledFunction pullback(const SampledFunction& phi, const SampledMap& f);

Json to_json(const SampledMap& f);
/// Rebuilds a map over the given spaces; refs must match.
SampledMap map_from_json(const Json& j, const MetricSpace& domain, const MetricSpace& codomain);

struct CoarseMapReport {
  /// Smallest A on the 1e-3 grid with |f(x)| >= |x|/A - A and
  /// d(f(x), f(x')) <= A d(x, x') + A everywhere on the sample.
  double A_lower = 1;
  bool coarse = true;
  double A_properness = 0;  // requirement from the first condition alone
  double A_lipschitz = 0;   // requirement from the second condition alone
  Index properness_witness = -1;
  std::pair<Index, Index> lipschitz_witness{-1, -1};
  /// Violations at A_lower - 1e-3 (empty when A_lower == 1).
  Index violations_below = 0;
  /// Per dyadic annulus of the domain: the largest requirement met there.
  std::vector<int> annuli;
  std::vector<double> annulus_requirement;
  double requirement_slope = 0;
  Index pairs_checked = 0;
};

struct CoarseOptions {
  double max_A = 1e6;
  /// Requirements growing faster than |x|^slope_threshold mean the sample is
  /// only coarse because it is finite.
  double slope_threshold = 0.25;
};

CoarseMapReport coarse_constant(const SampledMap& f, const CoarseOptions& options = {});

struct ClosenessReport {
  std::vector<double> eps;
  std::vector<double> C_eps;  // max(0, max_x d(f(x), g(x)) - eps |x|)
  std::vector<int> annuli;
  std::vector<double> annulus_ratio;  // sup d(f, g) / |x| per annulus, |x| >= 1
  double ratio_slope = 0;
  double max_distance = 0;
  Index max_witness = -1;
  bool sublinearly_close = false;
};

struct ClosenessOptions {
  int eps_levels = 7;  // eps = 1, 1/2, ..., 1/64
  double threshold = 0.05;
};

/// Close iff the final annulus ratio is below the threshold and not above
/// the first one.
ClosenessReport closeness(const SampledMap& f, const SampledMap& g,
                          const ClosenessOptions& options = {});

struct SeparationReport {
  SampledFunction phi;  // on the codomain
  std::vector<Index> sequence;
  std::vector<double> radii;
  std::vector<double> scales;
  std::vector<double> constants;  // sublinear Higson constants of phi
  double max_constant = 0;
};

/// Max of bumps of radius c |x_n| / 4 around f(x_n). Requires
/// d(f(x_n), g(x_n)) >= c |x_n| along the sequence and bumps that do not
/// reach any g(x_m).
SeparationReport separating_witness(const SampledMap& f, const SampledMap& g,
                                    std::span<const Index> sequence, double c);

/// Theta(t) = Q(t) S(t) from the polar decomposition T = Q S, with Q(t) the
/// rotation geodesic from Q to I and S(t) = S^(1 - t).
class GlPlusGeodesic {
 public:
  explicit GlPlusGeodesic(const Eigen::MatrixXd& T);

  Eigen::MatrixXd at(double t) const;
  /// Bound on the spectral norm of Theta'(t) over [0, 1].
  double speed_bound() const { return speed_; }
  const Eigen::MatrixXd& rotation() const { return Q_; }
  const Eigen::MatrixXd& stretch() const { return S_; }

 private:
  Eigen::MatrixXd T_, Q_, S_;
  Eigen::MatrixXd schur_basis_;
  std::vector<std::pair<Index, double>> angles_;  // 2x2 block start, angle
  std::vector<std::pair<Index, Index>> flip_pairs_;  // paired -1 entries, angle pi
  Eigen::MatrixXd stretch_basis_;
  Eigen::VectorXd stretch_values_;
  double speed_ = 0;
};

struct HomotopyPath {
  std::vector<double> t;
  std::vector<Eigen::MatrixXd> theta;
  std::vector<double> determinants;
  Eigen::MatrixXd T;
  double speed_bound = 0;
  double max_step = 0;  // max spectral norm of consecutive differences
  bool determinants_positive = true;
  bool endpoints_exact = true;
};

/// Samples the geodesic at t_k = k / (steps - 1), k < steps.
HomotopyPath glplus_path(const Eigen::MatrixXd& T, int steps);

template <typename Derived>
HomotopyPath glplus_path(const Eigen::MatrixBase<Derived>& T, int steps) {
  return glplus_path(Eigen::MatrixXd(T.template cast<double>()), steps);
}

struct HomotopyReport {
  CoarseMapReport coarse;
  double endpoint_T_error = 0;  // max |H(0, x) - T x|
  double endpoint_I_error = 0;  // max |H(1, x) - x|
  double max_snap = 0;
  double codomain_mesh = 0;
  bool endpoints_ok = true;
};

/// H(t, x) = Theta(t) x on a cone over an interval and a coordinate sample,
/// snapped to the codomain and checked as a coarse map from the cone metric.
HomotopyReport cone_homotopy_check(const Eigen::MatrixXd& T, const ConeSpace& cone,
                                   const SampledSpace& codomain, const CoarseOptions& options = {});

/// Plane grid covering |T| * radius for the homotopy codomain.
SampledSpace homotopy_codomain(const Eigen::MatrixXd& T, double radius, double spacing = 1.0);

struct EquivalenceSpec {
  int n = 2;
  Index radius = 128;
  double sphere_mesh = 0.05;
  double grid_spacing = 2;
  int grid_density = 32;
};

/// S^(n-1) x_cone N against R^n. The spaces are shared so the maps stay valid
/// when the witness is moved.
struct EquivalenceWitness {
  std::shared_ptr<const ConeSpace> cone;
  std::shared_ptr<const SampledSpace> grid;
  std::shared_ptr<const SampledMap> f;  // (p, k) -> k p
  std::shared_ptr<const SampledMap> g;  // x -> (snap(x / |x|), round |x|)
  CoarseMapReport f_report, g_report;
  ClosenessReport fg_report;  // f o g against the identity of the grid
  ClosenessReport gf_report;  // g o f against the identity of the cone
  double fg_displacement = 0;
  double gf_displacement = 0;
  /// Largest d(comp(x), x) - (1 + h + mesh_P max(1, |x|)) with h the grid
  /// snap radius and |x| the Euclidean norm or the N-coordinate. The base
  /// row k = 0 of the cone collapses to one grid point and is reported
  /// separately against diam P.
  double fg_excess = 0;
  double gf_excess = 0;
  double gf_base_displacement = 0;
  double p_diameter = 0;
  bool passed() const {
    return f_report.coarse && g_report.coarse && fg_report.sublinearly_close &&
           gf_report.sublinearly_close && fg_excess <= 0 && gf_excess <= 0 &&
           gf_base_displacement <= p_diameter + 1e-12;
  }
};

EquivalenceWitness equivalence_witness_Rn(const EquivalenceSpec& spec);

Json to_json(const CoarseMapReport& r);
Json to_json(const ClosenessReport& r);

}  // namespace corona
