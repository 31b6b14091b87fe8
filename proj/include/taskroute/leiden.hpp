#pragma once

#include <cstdint>
#include <vector>

#include "taskroute/graph.hpp"

namespace taskroute {

// Weighted modularity of a node->community assignment at the given
// resolution. An edgeless graph has modularity 0.
double modularity(const PromptGraph& g, const std::vector<int>& community,
                  double resolution);

// Leiden community detection: queue-based local moving to a fixed point,
// refinement constrained inside communities, then aggregation, repeated
// until the partition stops compressing. Deterministic for a fixed seed.
// Returns compact community ids per node. When `modularity_trace` is given,
// the partition modularity after every accepted local move is appended.
std::vector<int> leiden_partition(const PromptGraph& g, double resolution,
                                  std::uint64_t seed,
                                  std::vector<double>* modularity_trace = nullptr);

}  // namespace taskroute
