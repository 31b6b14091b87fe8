#include "taskroute/inference.hpp"

#include <cmath>

namespace taskroute {

ServingState::ServingState(PipelineConfig cfg, std::vector<ModelCard> pool_,
                           DiscoveryResult discovery_, ClassifierParams classifier_,
                           RouterParams router_)
    : config(std::move(cfg)),
      pool(std::move(pool_)),
      discovery(std::move(discovery_)),
      classifier(std::move(classifier_)),
      router(std::move(router_)) {
  config.validate();
  const int n = static_cast<int>(pool.size());
  if (n == 0) throw Error("serving state: empty model pool");
  if (discovery.pool_size != n)
    throw Error("serving state: discovery artifact expects a pool of " +
                std::to_string(discovery.pool_size) + " models, pool file has " +
                std::to_string(n));
  if (router.pool_size() != n)
    throw Error("serving state: router artifact has " +
                std::to_string(router.pool_size()) + " general heads, pool has " +
                std::to_string(n));
  if (discovery.others_median_quality.size() != n)
    throw Error("serving state: Others medians have the wrong length");
  if (classifier.task_count() != discovery.cluster_count())
    throw Error("serving state: classifier has " +
                std::to_string(classifier.task_count()) + " tasks, discovery has " +
                std::to_string(discovery.cluster_count()));
  if (classifier.prompt_dim() != router.dims.prompt_dim)
    throw Error("serving state: classifier and router disagree on the prompt dimension");
}

Eigen::VectorXd stage1_scores(const DiscoveryResult& result,
                              const TaskAssignment& assignment) {
  if (assignment.assigned() && assignment.task_id < result.cluster_count())
    return result.clusters[static_cast<std::size_t>(assignment.task_id)].median_quality;
  return result.others_median_quality;
}

Eigen::VectorXd aggregate(const Eigen::VectorXd& stage2,
                          const Eigen::VectorXd& stage1, double alpha) {
  if (stage2.size() != stage1.size())
    throw Error("aggregate: score vectors have different lengths");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error("aggregate: alpha must be in [0,1]");
  return alpha * minmax_norm(stage2) + (1.0 - alpha) * minmax_norm(stage1);
}

namespace {

RoutingDecision decide(const ServingState& state,
                       const Eigen::VectorXd& prompt_embedding) {
  const TaskAssignment assignment =
      classify(state.classifier, prompt_embedding, state.config.classifier_threshold);
  const QualityEstimate est = estimate(state.router, prompt_embedding, assignment);

  RoutingDecision d;
  d.task_id = est.unknown_task ? -1 : assignment.task_id;
  d.stage1_scores = minmax_norm(stage1_scores(state.discovery, assignment));
  d.stage2_scores = minmax_norm(est.scores);
  d.final_scores = state.config.alpha * d.stage2_scores +
                   (1.0 - state.config.alpha) * d.stage1_scores;
  return d;
}

}  // namespace

RoutingDecision route(const ServingState& state,
                      const Eigen::VectorXd& prompt_embedding) {
  RoutingDecision d = decide(state, prompt_embedding);
  int best = 0;
  for (int m = 1; m < static_cast<int>(state.pool.size()); ++m) {
    const double s = d.final_scores[m];
    const double b = d.final_scores[best];
    if (s > b ||
        (s == b && state.pool[static_cast<std::size_t>(m)].cost_per_query <
                       state.pool[static_cast<std::size_t>(best)].cost_per_query))
      best = m;
  }
  d.chosen_model = best;
  d.cost = state.pool[static_cast<std::size_t>(best)].cost_per_query;
  return d;
}

RoutingDecision route_with_tolerance(const ServingState& state,
                                     const Eigen::VectorXd& prompt_embedding,
                                     double tolerance) {
  if (!(tolerance >= 0.0 && tolerance <= 1.0))
    throw Error("route_with_tolerance: tolerance must be in [0,1]");
  RoutingDecision d = decide(state, prompt_embedding);
  const double cutoff = d.final_scores.maxCoeff() - tolerance;

  int best = -1;
  for (int m = 0; m < static_cast<int>(state.pool.size()); ++m) {
    if (d.final_scores[m] < cutoff) continue;
    if (best < 0) {
      best = m;
      continue;
    }
    const double cm = state.pool[static_cast<std::size_t>(m)].cost_per_query;
    const double cb = state.pool[static_cast<std::size_t>(best)].cost_per_query;
    if (cm < cb || (cm == cb && d.final_scores[m] > d.final_scores[best]))
      best = m;
  }
  d.chosen_model = best;
  d.cost = state.pool[static_cast<std::size_t>(best)].cost_per_query;
  return d;
}

}  // namespace taskroute
