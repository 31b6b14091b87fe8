#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace taskroute {

// Full preference ordering of the model pool, most preferred first.
struct RankedList {
  std::vector<int> order;                     // permutation of 0..n-1
  std::optional<std::vector<double>> scores;  // fusion scores aligned to order

  int size() const { return static_cast<int>(order.size()); }
};

// Stable descending sort of model indices by quality; ties break to the
// lower model index.
RankedList ranked_list_from_quality(const Eigen::VectorXd& quality);

// 1-based rank of a model (the top model has rank 1).
int rank_of(const RankedList& list, int model_index);

// Top-weighted similarity between two full rankings of the same model set,
// extrapolated beyond the last depth (agreement past depth n is exactly 1
// for same-domain permutations). Agreement at depth d is the set overlap
// |top_d(a) n top_d(b)| / |top_d(a) u top_d(b)|. Returns a value in (0,1],
// equal to 1 exactly iff the two orders are identical.
double rbo(const RankedList& a, const RankedList& b, double persistence);

// Fuses rankings by the mean reciprocal-rank score 1/(rank + epsilon)
// averaged over lists, with 1-based ranks. Output is ordered by descending
// fused score, ties to the lower model index, with scores attached.
RankedList rrf_fuse(const std::vector<RankedList>& lists, double epsilon);

}  // namespace taskroute
