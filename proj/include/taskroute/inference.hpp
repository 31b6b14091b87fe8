#pragma once

#include <Eigen/Dense>
#include <vector>

#include "taskroute/classifier.hpp"
#include "taskroute/discovery.hpp"
#include "taskroute/router.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

// Everything the online path needs, immutable once constructed. The
// constructor cross-checks pool sizes and dimensions across artifacts.
struct ServingState {
  PipelineConfig config;
  std::vector<ModelCard> pool;
  DiscoveryResult discovery;
  ClassifierParams classifier;
  RouterParams router;

  ServingState(PipelineConfig cfg, std::vector<ModelCard> pool_,
               DiscoveryResult discovery_, ClassifierParams classifier_,
               RouterParams router_);
};

struct RoutingDecision {
  int chosen_model = 0;
  Eigen::VectorXd final_scores;
  int task_id = -1;  // -1 = no task
  Eigen::VectorXd stage1_scores;  // normalized
  Eigen::VectorXd stage2_scores;  // normalized
  double cost = 0.0;
};

// Task-level prior: the assigned cluster's per-model median quality, or the
// Others medians when no task is assigned (or the task id is unknown).
Eigen::VectorXd stage1_scores(const DiscoveryResult& result,
                              const TaskAssignment& assignment);

// alpha * norm(stage2) + (1 - alpha) * norm(stage1), element-wise.
Eigen::VectorXd aggregate(const Eigen::VectorXd& stage2,
                          const Eigen::VectorXd& stage1, double alpha);

// classify -> estimate -> aggregate -> argmax. Score ties break to the
// cheaper model, then the lower index.
RoutingDecision route(const ServingState& state,
                      const Eigen::VectorXd& prompt_embedding);

// Cheapest model whose final score is within `tolerance` of the best;
// ties prefer the higher score, then the lower index. Tolerance 0 matches
// route exactly.
RoutingDecision route_with_tolerance(const ServingState& state,
                                     const Eigen::VectorXd& prompt_embedding,
                                     double tolerance);

}  // namespace taskroute
