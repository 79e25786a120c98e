#pragma once

#include <array>
#include <map>
#include <unordered_map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corona/core.hpp"
#include "corona/graph.hpp"
#include "json.hpp"

namespace corona {

using Json = nlohmann::json;

/// Read-only view of a finite pointed metric space. Implemented by sampled
/// spaces, Euclidean cones and norm-swapping adaptors so that every
/// function-analytic routine runs on any of them.
class MetricSpace {
 public:
  virtual ~MetricSpace() = default;

  virtual Index size() const = 0;
  virtual double distance(Index i, Index j) const = 0;
  /// |x| := d(e, x) for the base point e.
  virtual const std::vector<double>& norms() const = 0;
  double norm(Index i) const;

  /// Distances from i to each target. The default loops distance().
  virtual void distances(Index i, std::span<const Index> targets, std::span<double> out) const;

  /// Sampling mesh: the largest gap a chain through the sample must jump.
  virtual double mesh() const = 0;
  /// Stable identity used by serialized functions and maps.
  virtual std::string ref() const = 0;

  /// True when ids are ordered along a half-line with the absolute-difference
  /// metric. Large line samples use adjacent-pair sups.
  virtual bool is_line() const { return false; }
};

/// Finite sample of a pointed proper quasi-geodesic metric space.
class SampledSpace : public MetricSpace {
 public:
  SampledSpace() = default;

  /// Euclidean metric on the rows of `coords`.
  static SampledSpace from_coordinates(std::string kind, Json params, Eigen::MatrixXd coords,
                                       Index base_point, double quasi_geodesic_c, double mesh);
  /// Explicit symmetric distance matrix.
  static SampledSpace from_distance_matrix(std::string kind, Json params, Eigen::MatrixXd dist,
                                           Index base_point, double quasi_geodesic_c, double mesh);

  Index size() const override { return static_cast<Index>(norms_.size()); }
  double distance(Index i, Index j) const override;
  const std::vector<double>& norms() const override { return norms_; }
  void distances(Index i, std::span<const Index> targets, std::span<double> out) const override;
  double mesh() const override { return mesh_; }
  std::string ref() const override { return ref_; }
  bool is_line() const override { return line_; }

  const std::string& kind() const { return kind_; }
  const Json& params() const { return params_; }
  Index base_point() const { return base_; }
  double quasi_geodesic_constant() const { return quasi_c_; }
  bool has_coordinates() const { return coords_.size() > 0; }
  Eigen::Index dimension() const { return coords_.cols(); }
  const Eigen::MatrixXd& coordinates() const { return coords_; }
  bool has_dense_distances() const { return dense_.size() > 0; }
  double max_norm() const;

  /// Ids with norm <= R, ascending.
  std::vector<Index> ball(double R) const;
  /// Ids with norm > R, ascending.
  std::vector<Index> outside_ball(double R) const;
  /// Dyadic annuli {x : 2^k <= |x| < 2^(k+1)} keyed by k.
  const std::map<int, std::vector<Index>>& annuli() const { return annuli_; }

 private:
  void finalize();

  std::string kind_;
  Json params_;
  std::string ref_;
  Eigen::MatrixXd coords_;
  Eigen::MatrixXd dense_;
  std::vector<double> norms_;
  std::map<int, std::vector<Index>> annuli_;
  Index base_ = 0;
  double quasi_c_ = 1;
  double mesh_ = 1;
  bool line_ = false;
};

/// Finite weighted graph standing in for a compact path metric space P.
class CompactGraph {
 public:
  CompactGraph() = default;
  CompactGraph(std::string kind, Json params, Eigen::MatrixXd coords,
               std::vector<WeightedEdge> edges, bool cyclic = false);

  Index vertex_count() const { return static_cast<Index>(dist_.rows()); }
  double distance(Index u, Index v) const { return dist_(u, v); }
  const Eigen::MatrixXd& distances() const { return dist_; }
  double diameter() const { return diameter_; }
  /// Longest edge.
  double mesh() const { return mesh_; }
  const Eigen::MatrixXd& coordinates() const { return coords_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  const CsrGraph& graph() const { return graph_; }
  /// Regular polygon with uniform weights: index shifts are isometries.
  bool is_cyclic() const { return cyclic_; }
  const std::string& kind() const { return kind_; }
  const Json& params() const { return params_; }
  std::string ref() const { return ref_; }

 private:
  std::string kind_;
  Json params_;
  std::string ref_;
  Eigen::MatrixXd coords_;
  std::vector<WeightedEdge> edges_;
  CsrGraph graph_;
  Eigen::MatrixXd dist_;
  double diameter_ = 0;
  double mesh_ = 0;
  bool cyclic_ = false;
};

// Builders --------------------------------------------------------------

/// {0, step, ..., n_max*step} with |a - b|, base point 0.
SampledSpace build_halfline(Index n_max, double step);

/// Quasi-uniform sample of the ball of radius max_radius in R^dim. Each dyadic
/// annulus below max_radius gets a lattice with a hashed offset and spacing
/// min(max_spacing, volume-per-point) shrunk until it holds >= density points.
/// The origin is point 0.
SampledSpace build_euclidean_grid(int dim, double max_radius, int density, std::uint64_t seed = 0,
                                  double max_spacing = 1.0);

/// Arbitrary point cloud with the Euclidean metric.
SampledSpace build_point_cloud(const Eigen::MatrixXd& coords, Index base_point = 0,
                               double quasi_geodesic_c = 1.0, std::string label = "cloud");

/// [0, length] with n >= ceil(length / mesh) + 1 evenly spaced vertices.
CompactGraph build_interval(double mesh, double length = 1.0);
/// S^(dim-1) for dim in {2, 3}: a regular 2^k-gon on the circle or a
/// subdivided icosahedron on the 2-sphere, edges weighted by arc length.
CompactGraph build_sphere_graph(int dim, double mesh);
/// One-vertex space.
CompactGraph build_point_graph();

/// P's shortest-path metric as a sampled space based at vertex 0.
SampledSpace space_from_graph(const CompactGraph& p);

// Diagnostics -----------------------------------------------------------

struct MetricReport {
  bool passed = true;
  Index triples_checked = 0;
  double worst_triangle_excess = 0;  // max of d(i,k) - d(i,j) - d(j,k)
  double worst_asymmetry = 0;
  double worst_self_distance = 0;
  std::array<Index, 3> witness{-1, -1, -1};
};

/// Metric axioms on all pairs and on every triple (or `max_triples` hashed
/// triples when the space is larger than that).
MetricReport validate_metric(const MetricSpace& space, double tol = 1e-9,
                             Index max_triples = 2'000'000, std::uint64_t seed = 0);

struct QuasiGeodesicReport {
  bool passed = true;
  bool disconnected = false;
  double C = 1;
  Index pairs_checked = 0;
  double worst_violation = 0;  // > 0 means the two-sided inequality fails
  std::pair<Index, Index> witness{-1, -1};
};

/// For sampled pairs, routes a chain with hops <= C through the sample, reads
/// it as a piecewise-constant map [0, d(x, x')] -> X parametrized by scaled
/// arc length, and measures the worst violation of
/// (1/C)|a-b| - C <= d(f(a), f(b)) <= C|a-b| + C. Runs every pair when
/// `trials` covers them.
QuasiGeodesicReport quasi_geodesic_check(const SampledSpace& space, double C, Index trials,
                                         std::uint64_t seed = 0);

/// For every point, the ids y with d(x, y) <= r, ascending. Uses a cell grid
/// on coordinate spaces, a sweep on lines and distance rows otherwise.
std::vector<std::vector<Index>> radius_neighbors(const MetricSpace& space, double r);

/// Nearest-sample lookup over a uniform cell grid.
class NearestIndex {
 public:
  NearestIndex(const Eigen::MatrixXd& coords, double cell);
  /// Nearest point id (smallest id on ties) and its distance.
  std::pair<Index, double> nearest(const Eigen::Ref<const Eigen::VectorXd>& q) const;
  /// Ids within distance r of q, ascending.
  std::vector<Index> within(const Eigen::Ref<const Eigen::VectorXd>& q, double r) const;

 private:
  std::uint64_t key(const std::vector<long long>& cell) const;
  std::vector<long long> cell_of(const Eigen::Ref<const Eigen::VectorXd>& q) const;

  Eigen::MatrixXd coords_;
  double cell_;
  std::vector<long long> lo_, hi_;
  std::unordered_map<std::uint64_t, std::vector<Index>> buckets_;
};

}  // namespace corona
