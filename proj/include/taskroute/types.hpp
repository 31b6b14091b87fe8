#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskroute {

// Thrown for data, config, and artifact problems. The CLI maps these to
// exit code 2, separating them from usage errors (exit 1).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelCard {
  std::string model_id;
  int index = 0;  // contiguous 0..n-1 position in the pool
  double cost_per_query = 0.0;
};

struct PromptRecord {
  std::string prompt_id;
  std::string source;
  Eigen::VectorXd prompt_embedding;
  Eigen::VectorXd desc_embedding;  // embedding of the task description
  Eigen::VectorXd quality;         // length = pool size, entries in [0,1]
};

struct Dataset {
  std::vector<ModelCard> pool;
  std::vector<PromptRecord> records;

  int pool_size() const { return static_cast<int>(pool.size()); }
  int prompt_dim() const {
    return records.empty() ? 0
                           : static_cast<int>(records.front().prompt_embedding.size());
  }
  int desc_dim() const {
    return records.empty() ? 0
                           : static_cast<int>(records.front().desc_embedding.size());
  }
};

// Knobs for the whole pipeline. Defaults follow the reference setup:
// k=5 neighbors, RBO threshold 0.4, three clustering iterations,
// coverage threshold 0.8, aggregation weight 0.5.
struct PipelineConfig {
  int knn_k = 5;
  double rbo_threshold = 0.4;
  double rbo_persistence = 0.9;
  double rrf_epsilon = 60.0;
  int leiden_iterations = 3;
  double leiden_resolution = 1.0;
  double coverage_threshold = 0.8;
  int min_cluster_size = 5;
  double alpha = 0.5;
  double classifier_threshold = 0.5;
  int model_embed_dim = 32;
  int adapter_hidden_dim = 64;
  std::int64_t seed = 0;

  // Throws Error on any out-of-range field.
  void validate() const;
};

bool operator==(const PipelineConfig& a, const PipelineConfig& b);

// Flat key=value text, one field per line.
PipelineConfig parse_config_text(const std::string& text);
std::string config_to_text(const PipelineConfig& cfg);
PipelineConfig load_config_file(const std::string& path);

}  // namespace taskroute
