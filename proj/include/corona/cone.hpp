#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>

#include "corona/spaces.hpp"

namespace corona {

/// Which X-pairs become X-move edges.
struct ConeAdjacency {
  enum class Kind { consecutive, nearest, radius };
  Kind kind = Kind::nearest;
  int k = 8;          // nearest: k nearest neighbours, symmetrized
  double radius = 0;  // radius: every pair within this distance
};

struct ConeOptions {
  ConeAdjacency adjacency;
  Index max_vertices = 200'000;
  /// Doubles kept in the shortest-path row cache before it is flushed.
  Index row_cache_budget = 16'000'000;
};

/// P x_cone X as a weighted product graph. Vertex (p, x) has id p * |X| + x.
/// X-moves at fixed p weigh d_X(x, x'); P-moves along an edge of P at fixed x
/// weigh max(1, |x|) * d_P(p, p'). Distances are shortest paths, computed per
/// source and cached; d(a, b) is always read from the row of min(a, b) so the
/// metric is exactly symmetric.
class ConeSpace : public MetricSpace {
 public:
  ConeSpace(CompactGraph p, SampledSpace x, ConeOptions options = {});

  Index size() const override { return np_ * nx_; }
  double distance(Index a, Index b) const override;
  void distances(Index a, std::span<const Index> targets, std::span<double> out) const override;
  const std::vector<double>& norms() const override { return norms_; }
  double mesh() const override { return mesh_; }
  std::string ref() const override { return ref_; }

  Index vertex(Index p, Index x) const { return p * nx_ + x; }
  Index p_of(Index v) const { return v / nx_; }
  Index x_of(Index v) const { return v % nx_; }
  Index base_vertex() const { return vertex(0, x_.base_point()); }

  const CompactGraph& p_space() const { return p_; }
  const SampledSpace& x_space() const { return x_; }
  const CsrGraph& graph() const { return graph_; }
  const ConeOptions& options() const { return options_; }
  Index x_edge_count() const { return x_edges_; }

  /// Full shortest-path row from a vertex (uncached copy semantics).
  std::vector<double> shortest_row(Index source) const;

  /// Sum over consecutive points of d_X + max(1, |x_j|, |x_j+1|) d_P.
  double polyline_length(std::span<const std::pair<Index, Index>> points) const;

 private:
  std::shared_ptr<const std::vector<double>> row(Index source) const;
  /// Source row and column reading d(a, b) for a <= b.
  std::pair<Index, Index> canonical(Index a, Index b) const;

  CompactGraph p_;
  SampledSpace x_;
  ConeOptions options_;
  Index np_ = 0, nx_ = 0;
  Index x_edges_ = 0;
  CsrGraph graph_;
  std::vector<double> norms_;
  double mesh_ = 0;
  std::string ref_;

  struct Cache {
    std::mutex mutex;
    std::unordered_map<Index, std::shared_ptr<const std::vector<double>>> rows;
    Index stored = 0;
  };
  std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
};

/// X-edges for the given adjacency rule (pairs i < j, ascending).
std::vector<WeightedEdge> x_adjacency(const SampledSpace& x, const ConeAdjacency& rule);

double cone_distance(const ConeSpace& cone, std::pair<Index, Index> a, std::pair<Index, Index> b);

/// The cone's vertices, but with norms replaced by the X-norm |x|. Pair sups
/// over this view range over pairs with |x|, |x'| > R, the hypothesis used in
/// the product bound.
class ConeXNormView : public MetricSpace {
 public:
  explicit ConeXNormView(const ConeSpace& cone);
  Index size() const override { return cone_.size(); }
  double distance(Index a, Index b) const override { return cone_.distance(a, b); }
  void distances(Index a, std::span<const Index> t, std::span<double> out) const override {
    cone_.distances(a, t, out);
  }
  const std::vector<double>& norms() const override { return norms_; }
  double mesh() const override { return cone_.mesh(); }
  std::string ref() const override { return cone_.ref(); }

 private:
  const ConeSpace& cone_;
  std::vector<double> norms_;
};

struct LowerBoundReport {
  double R = 0;
  double tolerance = 0;
  Index pairs_checked = 0;
  bool passed = true;
  /// max of d_X + R d_P - d_cone and its pair.
  double worst_margin = -kInf;
  std::pair<Index, Index> witness{-1, -1};
  /// Same with |x| in place of R, |x| taken as the larger of the two norms
  /// (the inequality is stated for either ordering). Recorded only.
  double literal_worst_margin = -kInf;
  std::pair<Index, Index> literal_witness{-1, -1};
  Index literal_violations = 0;
};

/// Over all vertex pairs with |x|, |x'| > R checks
/// d_X(x, x') + R d_P(p, p') <= d_cone + tolerance. Tolerance < 0 means one
/// X-mesh.
LowerBoundReport verify_lower_bound(const ConeSpace& cone, double R, double tolerance = -1);

/// A family of nested discretizations: level l halves the P mesh and the X
/// step of level l - 1 over the same extent.
struct RefinementSpec {
  std::string p_kind = "interval";  // interval | sphere | point
  double p_mesh = 0.25;
  double p_length = 1;
  int sphere_dim = 2;
  double x_extent = 32;
  double x_step = 1;
  int levels = 3;
  ConeOptions options{{ConeAdjacency::Kind::consecutive, 8, 0}};
  /// Probes as ((p, x), (p', x')) in level-0 vertex ids.
  std::vector<std::pair<std::pair<Index, Index>, std::pair<Index, Index>>> probes;
};

struct RefinementReport {
  std::vector<Index> vertex_counts;
  std::vector<std::vector<double>> distances;  // [probe][level]
  std::vector<double> max_change;              // per level transition, relative
  bool monotone = true;
  bool complete = true;
  std::string note;
  double final_change = 0;
};

RefinementReport refinement_convergence(const RefinementSpec& spec);

}  // namespace corona
