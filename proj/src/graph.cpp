#include "corona/graph.hpp"

#include <algorithm>
#include <queue>

namespace corona {

CsrGraph::CsrGraph(Index vertex_count, const std::vector<WeightedEdge>& edges) {
  offsets_.assign(vertex_count + 1, 0);
  for (const auto& e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= vertex_count || e.v >= vertex_count) {
      throw InputError("graph edge endpoint out of range");
    }
    if (!(e.weight >= 0)) throw InputError("graph edge weight must be nonnegative");
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (Index v = 0; v < vertex_count; ++v) offsets_[v + 1] += offsets_[v];
  targets_.resize(offsets_.back());
  weights_.resize(offsets_.back());
  std::vector<Index> fill(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges) {
    targets_[fill[e.u]] = e.v;
    weights_[fill[e.u]++] = e.weight;
    targets_[fill[e.v]] = e.u;
    weights_[fill[e.v]++] = e.weight;
  }
}

namespace {

using QueueEntry = std::pair<double, Index>;
using MinQueue =
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>>;

}  // namespace

void dijkstra(const CsrGraph& g, Index source, std::vector<double>& dist) {
  const Index n = g.vertex_count();
  dist.assign(n, kInf);
  if (source < 0 || source >= n) throw InputError("dijkstra source out of range");
  std::vector<QueueEntry> storage;
  storage.reserve(static_cast<std::size_t>(n));
  MinQueue queue(std::greater<QueueEntry>{}, std::move(storage));
  dist[source] = 0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    const auto nb = g.neighbors(v);
    for (Index k = 0; k < nb.count; ++k) {
      const double cand = d + nb.weight[k];
      const Index w = nb.target[k];
      if (cand < dist[w]) {
        dist[w] = cand;
        queue.emplace(cand, w);
      }
    }
  }
}

std::vector<Index> shortest_path(const CsrGraph& g, Index source, Index target) {
  const Index n = g.vertex_count();
  std::vector<double> dist(n, kInf);
  std::vector<Index> parent(n, -1);
  MinQueue queue;
  dist[source] = 0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    if (v == target) break;
    const auto nb = g.neighbors(v);
    for (Index k = 0; k < nb.count; ++k) {
      const double cand = d + nb.weight[k];
      const Index w = nb.target[k];
      // Ties resolve to the smaller parent id so paths are reproducible.
      if (cand < dist[w] || (cand == dist[w] && parent[w] > v)) {
        const bool improved = cand < dist[w];
        dist[w] = cand;
        parent[w] = v;
        if (improved) queue.emplace(cand, w);
      }
    }
  }
  if (dist[target] == kInf) return {};
  std::vector<Index> path;
  for (Index v = target; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

bool is_connected(const CsrGraph& g) {
  if (g.vertex_count() <= 1) return true;
  std::vector<char> seen(g.vertex_count(), 0);
  std::vector<Index> stack{0};
  seen[0] = 1;
  Index count = 1;
  while (!stack.empty()) {
    const Index v = stack.back();
    stack.pop_back();
    const auto nb = g.neighbors(v);
    for (Index k = 0; k < nb.count; ++k) {
      const Index w = nb.target[k];
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == g.vertex_count();
}

}  // namespace corona
