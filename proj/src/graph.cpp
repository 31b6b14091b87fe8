#include "taskroute/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taskroute/types.hpp"

namespace taskroute {

namespace {

// Keeps surviving edge weights inside (0,1]: the minimum edge of a signal
// would otherwise normalize to exactly zero and vanish from the graph.
constexpr double kWeightFloor = 1e-12;

double normalize(double x, double lo, double hi) {
  if (hi == lo) return 1.0;
  return std::max((x - lo) / (hi - lo), kWeightFloor);
}

}  // namespace

std::vector<std::vector<std::pair<int, double>>> PromptGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, double>>> adj(node_count);
  for (const auto& e : edges) {
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }
  return adj;
}

PromptGraph build_graph(const std::vector<GraphNode>& nodes, int k,
                        double rbo_threshold, double persistence) {
  if (k < 1) throw Error("build_graph: k must be >= 1");
  if (nodes.size() < 2) throw Error("build_graph: need at least 2 nodes");
  const int n = static_cast<int>(nodes.size());
  const Eigen::Index dim = nodes.front().embedding.size();
  for (const auto& node : nodes)
    if (node.embedding.size() != dim)
      throw Error("build_graph: embeddings have mixed dimensions");

  PromptGraph g;
  g.node_count = n;

  std::vector<double> norms(n);
  for (int i = 0; i < n; ++i) {
    norms[i] = nodes[i].embedding.norm();
    if (norms[i] == 0.0) ++g.zero_norm_nodes;
  }

  // Union of per-node k nearest neighbors by cosine similarity.
  std::set<std::pair<int, int>> candidates;
  std::vector<std::pair<double, int>> sims;
  for (int u = 0; u < n; ++u) {
    if (norms[u] == 0.0) continue;
    sims.clear();
    for (int v = 0; v < n; ++v) {
      if (v == u || norms[v] == 0.0) continue;
      const double cos = nodes[u].embedding.dot(nodes[v].embedding) / (norms[u] * norms[v]);
      sims.emplace_back(cos, v);
    }
    const int take = std::min<int>(k, static_cast<int>(sims.size()));
    std::partial_sort(sims.begin(), sims.begin() + take, sims.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    for (int i = 0; i < take; ++i) {
      const int v = sims[i].second;
      candidates.emplace(std::min(u, v), std::max(u, v));
    }
  }

  // RBO filter, then min-max normalization of both signals over survivors.
  struct Scored {
    int u, v;
    double cos, rbo;
  };
  std::vector<Scored> survivors;
  for (const auto& [u, v] : candidates) {
    const double overlap = rbo(nodes[u].ranking, nodes[v].ranking, persistence);
    if (overlap < rbo_threshold) continue;
    const double cos = nodes[u].embedding.dot(nodes[v].embedding) / (norms[u] * norms[v]);
    survivors.push_back({u, v, cos, overlap});
  }
  if (survivors.empty()) return g;

  double cos_lo = survivors.front().cos, cos_hi = survivors.front().cos;
  double rbo_lo = survivors.front().rbo, rbo_hi = survivors.front().rbo;
  for (const auto& s : survivors) {
    cos_lo = std::min(cos_lo, s.cos);
    cos_hi = std::max(cos_hi, s.cos);
    rbo_lo = std::min(rbo_lo, s.rbo);
    rbo_hi = std::max(rbo_hi, s.rbo);
  }
  g.edges.reserve(survivors.size());
  for (const auto& s : survivors) {
    const double w = std::sqrt(normalize(s.cos, cos_lo, cos_hi) *
                               normalize(s.rbo, rbo_lo, rbo_hi));
    g.edges.push_back({s.u, s.v, w});
  }
  // std::set iteration already yields ascending (u, v)
  return g;
}

}  // namespace taskroute
