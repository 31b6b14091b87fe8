#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "taskroute/artifact.hpp"
#include "taskroute/graph.hpp"
#include "taskroute/ranked_list.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

// A discovered task type.
struct TaskCluster {
  int task_id = 0;
  std::vector<std::string> member_prompt_ids;
  Eigen::VectorXd center;          // median-pooled desc embeddings
  RankedList fused_list;           // rank fusion over member preferences
  Eigen::VectorXd median_quality;  // per-model median over members
  std::vector<int> candidates;     // prefix of fused_list.order
  Eigen::VectorXd description_embedding;  // classifier initialization row

  int size() const { return static_cast<int>(member_prompt_ids.size()); }
};

struct DiscoveryResult {
  std::vector<TaskCluster> clusters;
  Eigen::VectorXd others_median_quality;
  std::map<std::string, int> assignment;  // prompt_id -> task_id, -1 = Others
  int pool_size = 0;

  int cluster_count() const { return static_cast<int>(clusters.size()); }
};

// Element-wise cluster summary. Embedding medians take the lower middle
// value on even counts; quality medians take the midpoint of the middle
// pair.
struct ClusterSummary {
  Eigen::VectorXd center;
  RankedList fused_list;
  Eigen::VectorXd median_quality;
};
ClusterSummary summarize(const Dataset& ds, const std::vector<int>& member_indices,
                         double rrf_epsilon);

// Fraction of members whose own top-1 model lies in `candidate_set`.
double coverage(const Dataset& ds, const std::vector<int>& member_indices,
                const std::vector<int>& candidate_set);

// Smallest prefix of the fused order whose coverage reaches the threshold;
// falls back to the whole pool if no prefix does.
std::vector<int> select_candidates(const Dataset& ds,
                                   const std::vector<int>& member_indices,
                                   const RankedList& fused_list,
                                   double coverage_threshold);

// Stage-1 offline discovery: kNN prompt graph with dual-signal edge
// weights, iterated Leiden clustering over cluster summaries, a size floor
// that dissolves residue into the Others pool, and adaptive candidate
// selection per surviving cluster.
DiscoveryResult iterative_cluster(const Dataset& ds, const PipelineConfig& cfg);

// One line per cluster: id, size, candidates, dominant sources.
std::string cluster_report(const DiscoveryResult& result, const Dataset& ds);

template <>
struct ArtifactCodec<DiscoveryResult> {
  static constexpr ArtifactTag tag = ArtifactTag::Discovery;
  static void encode(BinaryWriter& w, const DiscoveryResult& r);
  static DiscoveryResult decode(BinaryReader& r);
};

}  // namespace taskroute
