#pragma once

#include <Eigen/Dense>
#include <vector>

#include "taskroute/ranked_list.hpp"

namespace taskroute {

// Node payload for prompt-graph construction: an embedding for the semantic
// signal and a ranked list for the preference signal.
struct GraphNode {
  Eigen::VectorXd embedding;
  RankedList ranking;
};

struct GraphEdge {
  int u = 0, v = 0;  // u < v
  double weight = 0.0;
};

struct PromptGraph {
  int node_count = 0;
  std::vector<GraphEdge> edges;  // canonical order: ascending (u, v)
  int zero_norm_nodes = 0;       // nodes whose edges were rejected

  std::vector<std::vector<std::pair<int, double>>> adjacency() const;
};

// kNN candidate edges by cosine similarity over embeddings, filtered by
// ranked-list agreement below `rbo_threshold`, weighted by the geometric
// mean of both signals after min-max normalization over the surviving set.
// A signal that is constant over the survivors normalizes to 1.
PromptGraph build_graph(const std::vector<GraphNode>& nodes, int k,
                        double rbo_threshold, double persistence);

}  // namespace taskroute
