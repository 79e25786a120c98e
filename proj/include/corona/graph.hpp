#pragma once

#include <vector>

#include "corona/core.hpp"

namespace corona {

struct WeightedEdge {
  Index u = 0;
  Index v = 0;
  double weight = 0;
};

/// Undirected weighted graph in compressed sparse row form.
class CsrGraph {
 public:
  CsrGraph() = default;
  CsrGraph(Index vertex_count, const std::vector<WeightedEdge>& edges);

  Index vertex_count() const { return static_cast<Index>(offsets_.size()) - 1; }
  Index edge_count() const { return static_cast<Index>(targets_.size()) / 2; }

  struct Neighbors {
    const Index* target;
    const double* weight;
    Index count;
  };
  Neighbors neighbors(Index v) const {
    const Index b = offsets_[v];
    return {targets_.data() + b, weights_.data() + b, offsets_[v + 1] - b};
  }

 private:
  std::vector<Index> offsets_{0};
  std::vector<Index> targets_;
  std::vector<double> weights_;
};

/// Single-source shortest paths with a binary-heap frontier. Unreachable
/// vertices get +inf.
void dijkstra(const CsrGraph& g, Index source, std::vector<double>& dist);

/// Shortest path from source to target as a vertex sequence (empty when
/// unreachable). Stops once the target is settled.
std::vector<Index> shortest_path(const CsrGraph& g, Index source, Index target);

/// True when every vertex is reachable from vertex 0.
bool is_connected(const CsrGraph& g);

}  // namespace corona
