#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "taskroute/artifact.hpp"
#include "taskroute/inference.hpp"
#include "taskroute/nn.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

// Planted-structure benchmark spec. Task centers sit on scaled orthogonal
// axes `center_separation` apart (in units of the unit within-task noise);
// description embeddings get half the prompt noise. Outliers are placed at
// twice the separation along random directions with uniform random quality.
struct SynthSpec {
  int n_tasks = 3;
  int prompts_per_task = 20;
  int embed_dim = 16;
  double center_separation = 10.0;
  Eigen::MatrixXd affinity;  // n_tasks x n_models, entries in [0,1]
  double quality_noise = 0.02;
  int outlier_count = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruthEntry {
  int planted_task = -1;  // -1 = outlier
  Eigen::VectorXd true_mean_quality;
  int oracle_choice = 0;  // argmax of true mean quality, tie to lower index
};

struct GroundTruth {
  std::map<std::string, GroundTruthEntry> entries;
};

// Rotating-champion affinity pattern: each task gets a distinct best model
// at 0.9 with a near-tied runner-up, everything else mid-range.
Eigen::MatrixXd default_affinity(int n_tasks, int n_models, std::uint64_t seed);

std::pair<Dataset, GroundTruth> generate(const SynthSpec& spec);

// Adjusted Rand Index between two prompt->label maps over the same key set;
// -1 labels form their own cluster.
double ari(const std::map<std::string, int>& a, const std::map<std::string, int>& b);

// Macro-averaged F1 over the classes present in `truth`.
double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred);

using Decider = std::function<int(const PromptRecord&)>;

struct RouterMetrics {
  double mean_quality = 0.0;
  double oracle_quality = 0.0;
  double oracle_ratio = 0.0;
  double mean_cost = 0.0;
  std::vector<int> routing_counts;  // per model
};

RouterMetrics eval_router(const Decider& decider, const Dataset& eval,
                          const GroundTruth& truth);

struct CostCurvePoint {
  double tolerance = 0.0;
  double mean_cost = 0.0;
  double mean_quality = 0.0;
};

// One tolerance-mode evaluation per grid point.
std::vector<CostCurvePoint> cost_curve(const ServingState& state,
                                       const Dataset& eval, const GroundTruth& truth,
                                       const std::vector<double>& grid);

// Nearest-neighbor baseline: mean quality over the k closest training
// prompts by cosine, argmax model. k is clamped to the training size.
Decider baseline_knn(const Dataset& train, int k);

// n-way softmax classifier on best-model labels; decides by argmax class.
Decider baseline_mlp(const Dataset& train, const TrainSpec& spec, int hidden_dim = 32);

std::string metrics_csv(const RouterMetrics& metrics, const std::vector<ModelCard>& pool);
std::string cost_curve_csv(const std::vector<CostCurvePoint>& points);

template <>
struct ArtifactCodec<GroundTruth> {
  static constexpr ArtifactTag tag = ArtifactTag::GroundTruth;
  static void encode(BinaryWriter& w, const GroundTruth& g);
  static GroundTruth decode(BinaryReader& r);
};

}  // namespace taskroute
