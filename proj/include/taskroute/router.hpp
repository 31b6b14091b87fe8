#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "taskroute/artifact.hpp"
#include "taskroute/classifier.hpp"
#include "taskroute/discovery.hpp"
#include "taskroute/nn.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

struct RouterDims {
  int prompt_dim = 0;
  int proj_dim = 32;    // prompt projection output
  int embed_dim = 32;   // model-embedding width
  int hidden_dim = 64;  // adapter hidden layer
};

// Shared trunk (prompt projection + model-embedding table), one general
// quality head per model, and one task-specific adapter per discovered
// (task, candidate model) pair.
struct RouterParams {
  RouterDims dims;
  Eigen::MatrixXd prompt_proj;  // proj_dim x prompt_dim
  Eigen::MatrixXd model_embed;  // n x embed_dim
  std::vector<MlpParams> general;
  std::map<std::pair<int, int>, MlpParams> task_adapters;

  int pool_size() const { return static_cast<int>(general.size()); }
};

bool bitwise_equal(const RouterParams& a, const RouterParams& b);

enum class HeadKind : std::uint8_t { General = 0, TaskSpecific = 1 };

struct QualityEstimate {
  Eigen::VectorXd scores;  // length n, each in (0,1)
  std::vector<HeadKind> provenance;
  int head_evaluations = 0;
  bool unknown_task = false;  // assignment named a task with no adapters
};

RouterParams init_router(const std::vector<ModelCard>& pool,
                         const DiscoveryResult& result, const RouterDims& dims,
                         std::uint64_t seed);

// Phase 1: joint MSE training of the trunk and the general heads on every
// (record, model) pair. Task adapters are untouched.
TrainTrace train_base(RouterParams& params, const Dataset& train,
                      const TrainSpec& spec);

struct AdapterTrainReport {
  std::map<int, int> records_per_task;            // classifier-relabeled counts
  std::vector<std::pair<int, int>> untrained;     // adapters left at their clone init
  std::map<std::pair<int, int>, TrainTrace> traces;

  std::string render() const;
};

// Phase 2: relabels the training set with the classifier, clones each task
// adapter from its model's general head, then fine-tunes it on the records
// assigned to its task. The trunk and general heads stay bit-identical.
AdapterTrainReport train_task_adapters(RouterParams& params, const Dataset& train,
                                       const ClassifierParams& clf,
                                       double classifier_threshold,
                                       const TrainSpec& spec);

// Head input for model m is concat(prompt projection, model embedding).
// With an assigned task, candidates of that task use their task adapters
// and everything else the general heads; with no task (or an unknown task
// id) all heads are general. Exactly n head evaluations either way.
QualityEstimate estimate(const RouterParams& params,
                         const Eigen::VectorXd& prompt_embedding,
                         const TaskAssignment& assignment);

template <>
struct ArtifactCodec<RouterParams> {
  static constexpr ArtifactTag tag = ArtifactTag::Router;
  static void encode(BinaryWriter& w, const RouterParams& p);
  static RouterParams decode(BinaryReader& r);
};

}  // namespace taskroute
