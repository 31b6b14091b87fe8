#pragma once

#include <Eigen/Dense>
#include <optional>

#include "taskroute/artifact.hpp"
#include "taskroute/discovery.hpp"
#include "taskroute/nn.hpp"
#include "taskroute/types.hpp"

namespace taskroute {

// Bilinear prompt-task matcher: score_j = logistic((P e_p) . T_j + b_j).
struct ClassifierParams {
  Eigen::MatrixXd projection;      // d_model x d_p
  Eigen::MatrixXd task_encodings;  // tasks x d_model
  Eigen::VectorXd bias;            // tasks

  int task_count() const { return static_cast<int>(task_encodings.rows()); }
  int model_dim() const { return static_cast<int>(projection.rows()); }
  int prompt_dim() const { return static_cast<int>(projection.cols()); }
};

bool bitwise_equal(const ClassifierParams& a, const ClassifierParams& b);

struct TaskAssignment {
  int task_id = -1;  // -1 = no task
  double score = 0.0;
  Eigen::VectorXd all_scores;

  bool assigned() const { return task_id >= 0; }
};

// Task encodings start from the clusters' description embeddings, truncated
// or zero-padded to d_model; the projection gets the standard uniform init
// and biases start at zero. An external description-embedding table (rows
// keyed by task id) overrides the cluster centers when provided.
ClassifierParams init_classifier(
    const DiscoveryResult& result, int d_model, int prompt_dim, std::uint64_t seed,
    const std::optional<std::map<int, Eigen::VectorXd>>& external_descriptions = std::nullopt);

// Argmax task if its score clears the threshold (a score equal to the
// threshold counts as assigned), otherwise none. Ties go to the lower task.
TaskAssignment classify(const ClassifierParams& params,
                        const Eigen::VectorXd& prompt_embedding, double threshold);

struct ClassifierGrad {
  Eigen::MatrixXd projection;
  Eigen::MatrixXd task_encodings;
  Eigen::VectorXd bias;
};

// Gradient of one record's BCE (mean over tasks) with the positive set
// {label}, or all-negative when label is -1.
ClassifierGrad classifier_grad(const ClassifierParams& params,
                               const Eigen::VectorXd& prompt_embedding, int label,
                               double* loss = nullptr);

// Multi-label binary cross-entropy over all tasks; a record's positive set
// is its single discovery label and Others records are all-negative rows.
TrainTrace train_classifier(ClassifierParams& params, const Dataset& train,
                            const DiscoveryResult& labels, const TrainSpec& spec);

// Loads an optional description-embedding file: one JSON object per line
// with keys task_id and embedding.
std::map<int, Eigen::VectorXd> load_description_embeddings(const std::string& path);

template <>
struct ArtifactCodec<ClassifierParams> {
  static constexpr ArtifactTag tag = ArtifactTag::Classifier;
  static void encode(BinaryWriter& w, const ClassifierParams& p);
  static ClassifierParams decode(BinaryReader& r);
};

}  // namespace taskroute
