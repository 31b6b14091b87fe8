#include "taskroute/classifier.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "taskroute/rng.hpp"

namespace taskroute {

namespace {

Eigen::VectorXd fit_to_dim(const Eigen::VectorXd& v, int d_model) {
  if (v.size() == d_model) return v;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d_model);
  const Eigen::Index copy = std::min<Eigen::Index>(v.size(), d_model);
  out.head(copy) = v.head(copy);
  return out;
}

}  // namespace

bool bitwise_equal(const ClassifierParams& a, const ClassifierParams& b) {
  auto mat_eq = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    return std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  return mat_eq(a.projection, b.projection) &&
         mat_eq(a.task_encodings, b.task_encodings) && mat_eq(a.bias, b.bias);
}

ClassifierParams init_classifier(
    const DiscoveryResult& result, int d_model, int prompt_dim, std::uint64_t seed,
    const std::optional<std::map<int, Eigen::VectorXd>>& external_descriptions) {
  if (result.clusters.empty())
    throw Error("init_classifier: discovery produced zero clusters");
  if (d_model < 1 || prompt_dim < 1)
    throw Error("init_classifier: dimensions must be positive");

  ClassifierParams params;
  Rng rng(mix_seed(seed, 0xc1a55));
  params.projection = glorot_matrix(d_model, prompt_dim, rng);
  params.task_encodings.resize(result.cluster_count(), d_model);
  for (const auto& cluster : result.clusters) {
    Eigen::VectorXd row = cluster.description_embedding;
    if (external_descriptions) {
      const auto it = external_descriptions->find(cluster.task_id);
      if (it != external_descriptions->end()) row = it->second;
    }
    params.task_encodings.row(cluster.task_id) = fit_to_dim(row, d_model).transpose();
  }
  params.bias = Eigen::VectorXd::Zero(result.cluster_count());
  return params;
}

TaskAssignment classify(const ClassifierParams& params,
                        const Eigen::VectorXd& prompt_embedding, double threshold) {
  if (prompt_embedding.size() != params.projection.cols())
    throw Error("classify: embedding has dimension " +
                std::to_string(prompt_embedding.size()) + ", expected " +
                std::to_string(params.projection.cols()));
  const Eigen::VectorXd projected = params.projection * prompt_embedding;
  const Eigen::VectorXd logits = params.task_encodings * projected + params.bias;

  TaskAssignment out;
  out.all_scores.resize(logits.size());
  int best = 0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    out.all_scores[j] = logistic(logits[j]);
    if (out.all_scores[j] > out.all_scores[best]) best = static_cast<int>(j);
  }
  out.score = out.all_scores[best];
  out.task_id = out.score >= threshold ? best : -1;
  return out;
}

ClassifierGrad classifier_grad(const ClassifierParams& params,
                               const Eigen::VectorXd& prompt_embedding, int label,
                               double* loss) {
  const int tasks = params.task_count();
  if (label >= tasks)
    throw Error("classifier_grad: label " + std::to_string(label) +
                " out of range for " + std::to_string(tasks) + " tasks");
  const Eigen::VectorXd projected = params.projection * prompt_embedding;
  const Eigen::VectorXd logits = params.task_encodings * projected + params.bias;

  Eigen::VectorXd delta(tasks);  // dBCE/dlogit = score - label
  double total = 0.0;
  for (int j = 0; j < tasks; ++j) {
    const double s = logistic(logits[j]);
    const double y = label == j ? 1.0 : 0.0;
    delta[j] = s - y;
    const double sc = std::clamp(s, 1e-12, 1.0 - 1e-12);
    total += y > 0.5 ? -std::log(sc) : -std::log(1.0 - sc);
  }
  const double scale = 1.0 / static_cast<double>(tasks);
  ClassifierGrad g;
  g.task_encodings = scale * delta * projected.transpose();
  g.bias = scale * delta;
  g.projection =
      scale * (params.task_encodings.transpose() * delta) * prompt_embedding.transpose();
  if (loss) *loss = total * scale;
  return g;
}

TrainTrace train_classifier(ClassifierParams& params, const Dataset& train,
                            const DiscoveryResult& labels, const TrainSpec& spec) {
  spec.validate();
  if (train.records.empty()) throw Error("train_classifier: empty training data");
  const int tasks = params.task_count();

  std::vector<int> label_of(train.records.size(), -1);
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const auto it = labels.assignment.find(train.records[i].prompt_id);
    if (it == labels.assignment.end())
      throw Error("train_classifier: record '" + train.records[i].prompt_id +
                  "' has no discovery label");
    if (it->second >= tasks)
      throw Error("train_classifier: label out of range for '" +
                  train.records[i].prompt_id + "'");
    label_of[i] = it->second;
  }

  // Mean BCE over all (record, task) cells.
  const double cell_count =
      static_cast<double>(train.records.size()) * static_cast<double>(tasks);
  auto bce_mean = [&]() {
    double total = 0.0;
    for (std::size_t i = 0; i < train.records.size(); ++i) {
      const TaskAssignment a = classify(params, train.records[i].prompt_embedding, 0.5);
      for (int j = 0; j < tasks; ++j) {
        const double s = std::clamp(a.all_scores[j], 1e-12, 1.0 - 1e-12);
        total += label_of[i] == j ? -std::log(s) : -std::log(1.0 - s);
      }
    }
    return total / cell_count;
  };

  TrainTrace trace;
  trace.initial_loss = bce_mean();

  Rng rng(spec.seed);
  AdamState<Eigen::MatrixXd> opt_p, opt_t;
  AdamState<Eigen::VectorXd> opt_b;
  long t = 0;

  std::vector<std::size_t> order(train.records.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    if (spec.shuffle) rng.shuffle(order);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t end =
          std::min(pos + static_cast<std::size_t>(spec.batch_size), order.size());
      Eigen::MatrixXd grad_p = Eigen::MatrixXd::Zero(params.projection.rows(),
                                                     params.projection.cols());
      Eigen::MatrixXd grad_t = Eigen::MatrixXd::Zero(tasks, params.model_dim());
      Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(tasks);
      for (std::size_t i = pos; i < end; ++i) {
        const auto& rec = train.records[order[i]];
        const ClassifierGrad g =
            classifier_grad(params, rec.prompt_embedding, label_of[order[i]]);
        grad_p += g.projection;
        grad_t += g.task_encodings;
        grad_b += g.bias;
      }
      const double scale = 1.0 / static_cast<double>(end - pos);
      grad_p *= scale;
      grad_t *= scale;
      grad_b *= scale;
      ++t;
      opt_p.step(params.projection, grad_p, spec.learning_rate, t);
      opt_t.step(params.task_encodings, grad_t, spec.learning_rate, t);
      opt_b.step(params.bias, grad_b, spec.learning_rate, t);
      pos = end;
    }
    const double epoch_mean = bce_mean();
    if (!std::isfinite(epoch_mean))
      throw Error("train_classifier: loss diverged at epoch " + std::to_string(epoch));
    trace.epoch_loss.push_back(epoch_mean);
  }
  return trace;
}

std::map<int, Eigen::VectorXd> load_description_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("description embedding file not found: " + path);
  std::map<int, Eigen::VectorXd> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("task_id") ||
        !j.contains("embedding") || !j["task_id"].is_number_integer() ||
        !j["embedding"].is_array())
      throw Error(path + ":" + std::to_string(lineno) +
                  ": expected {task_id, embedding}");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j["embedding"].size()));
    Eigen::Index i = 0;
    for (const auto& x : j["embedding"]) {
      if (!x.is_number())
        throw Error(path + ":" + std::to_string(lineno) +
                    ": non-numeric embedding entry");
      v[i++] = x.get<double>();
    }
    out[j["task_id"].get<int>()] = std::move(v);
  }
  return out;
}

void ArtifactCodec<ClassifierParams>::encode(BinaryWriter& w, const ClassifierParams& p) {
  w.mat(p.projection);
  w.mat(p.task_encodings);
  w.vec(p.bias);
}

ClassifierParams ArtifactCodec<ClassifierParams>::decode(BinaryReader& r) {
  ClassifierParams p;
  p.projection = r.mat();
  p.task_encodings = r.mat();
  p.bias = r.vec();
  return p;
}

}  // namespace taskroute
