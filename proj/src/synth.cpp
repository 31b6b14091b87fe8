#include "taskroute/synth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "taskroute/ranked_list.hpp"
#include "taskroute/rng.hpp"

namespace taskroute {

void SynthSpec::validate() const {
  if (n_tasks < 1) throw Error("synth spec: n_tasks must be >= 1");
  if (prompts_per_task < 1) throw Error("synth spec: prompts_per_task must be >= 1");
  if (embed_dim < n_tasks)
    throw Error("synth spec: embed_dim must be >= n_tasks for orthogonal centers");
  if (!(center_separation > 0.0))
    throw Error("synth spec: center_separation must be positive");
  if (affinity.rows() != n_tasks || affinity.cols() < 1)
    throw Error("synth spec: affinity must have one row per task");
  for (Eigen::Index r = 0; r < affinity.rows(); ++r)
    for (Eigen::Index c = 0; c < affinity.cols(); ++c)
      if (affinity(r, c) < 0.0 || affinity(r, c) > 1.0)
        throw Error("synth spec: affinity entries must lie in [0,1]");
  if (quality_noise < 0.0) throw Error("synth spec: quality_noise must be >= 0");
  if (outlier_count < 0) throw Error("synth spec: outlier_count must be >= 0");
}

Eigen::MatrixXd default_affinity(int n_tasks, int n_models, std::uint64_t seed) {
  if (n_models < 2) throw Error("default_affinity: need at least 2 models");
  Rng rng(mix_seed(seed, 0xaff1));
  Eigen::MatrixXd aff(n_tasks, n_models);
  for (int t = 0; t < n_tasks; ++t) {
    for (int m = 0; m < n_models; ++m) aff(t, m) = rng.uniform(0.25, 0.60);
    const int champion = t % n_models;
    const int runner = (champion + 1 + t / n_models) % n_models;
    aff(t, champion) = 0.90;
    aff(t, runner) = 0.86;  // near-tied pair
  }
  return aff;
}

std::pair<Dataset, GroundTruth> generate(const SynthSpec& spec) {
  spec.validate();
  const int n_models = static_cast<int>(spec.affinity.cols());
  Rng rng(spec.seed);

  Dataset ds;
  GroundTruth truth;

  // Costs are inversely tied to mean affinity with jitter, so strong models
  // are not automatically the cheap ones to route to.
  for (int m = 0; m < n_models; ++m) {
    ModelCard card;
    std::ostringstream name;
    name << "model" << (m < 10 ? "0" : "") << m;
    card.model_id = name.str();
    card.index = m;
    const double mean_affinity = spec.affinity.col(m).mean();
    card.cost_per_query =
        std::max(0.05, 1.05 - mean_affinity + 0.1 * rng.uniform(-1.0, 1.0));
    ds.pool.push_back(std::move(card));
  }

  // Orthogonal task centers with pairwise distance center_separation.
  const double axis = spec.center_separation / std::sqrt(2.0);
  std::vector<Eigen::VectorXd> centers;
  for (int t = 0; t < spec.n_tasks; ++t) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.embed_dim);
    c[t] = axis;
    centers.push_back(std::move(c));
  }

  auto record_id = [](int i) {
    std::ostringstream s;
    s << "p" << i;
    return s.str();
  };

  int counter = 0;
  for (int t = 0; t < spec.n_tasks; ++t) {
    for (int i = 0; i < spec.prompts_per_task; ++i) {
      PromptRecord rec;
      rec.prompt_id = record_id(counter++);
      rec.source = "task" + std::to_string(t);
      rec.prompt_embedding.resize(spec.embed_dim);
      rec.desc_embedding.resize(spec.embed_dim);
      for (int d = 0; d < spec.embed_dim; ++d) {
        rec.prompt_embedding[d] = centers[t][d] + rng.normal();
        rec.desc_embedding[d] = centers[t][d] + 0.5 * rng.normal();
      }
      rec.quality.resize(n_models);
      for (int m = 0; m < n_models; ++m)
        rec.quality[m] = std::clamp(
            spec.affinity(t, m) + rng.normal(0.0, spec.quality_noise), 0.0, 1.0);

      GroundTruthEntry entry;
      entry.planted_task = t;
      entry.true_mean_quality = spec.affinity.row(t).transpose();
      entry.oracle_choice = ranked_list_from_quality(entry.true_mean_quality).order.front();
      truth.entries[rec.prompt_id] = std::move(entry);
      ds.records.push_back(std::move(rec));
    }
  }

  for (int o = 0; o < spec.outlier_count; ++o) {
    PromptRecord rec;
    rec.prompt_id = record_id(counter++);
    rec.source = "outlier";
    Eigen::VectorXd direction(spec.embed_dim);
    for (int d = 0; d < spec.embed_dim; ++d) direction[d] = rng.normal();
    direction.normalize();
    const Eigen::VectorXd far = 2.0 * spec.center_separation * direction;
    rec.prompt_embedding.resize(spec.embed_dim);
    rec.desc_embedding.resize(spec.embed_dim);
    for (int d = 0; d < spec.embed_dim; ++d) {
      rec.prompt_embedding[d] = far[d] + rng.normal();
      rec.desc_embedding[d] = far[d] + 0.5 * rng.normal();
    }
    rec.quality.resize(n_models);
    for (int m = 0; m < n_models; ++m) rec.quality[m] = rng.uniform();

    GroundTruthEntry entry;
    entry.planted_task = -1;
    entry.true_mean_quality = rec.quality;
    entry.oracle_choice = ranked_list_from_quality(entry.true_mean_quality).order.front();
    truth.entries[rec.prompt_id] = std::move(entry);
    ds.records.push_back(std::move(rec));
  }

  return {std::move(ds), std::move(truth)};
}

double ari(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  if (a.size() != b.size())
    throw Error("ari: partitions cover different numbers of prompts");
  std::map<std::pair<int, int>, long> cells;
  std::map<int, long> rows, cols;
  for (const auto& [id, label_a] : a) {
    const auto it = b.find(id);
    if (it == b.end()) throw Error("ari: prompt '" + id + "' missing from one partition");
    ++cells[{label_a, it->second}];
    ++rows[label_a];
    ++cols[it->second];
  }
  auto choose2 = [](long x) { return 0.5 * static_cast<double>(x) * (x - 1); };
  double sum_cells = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : cells) sum_cells += choose2(count);
  for (const auto& [label, count] : rows) sum_rows += choose2(count);
  for (const auto& [label, count] : cols) sum_cols += choose2(count);
  const double total_pairs = choose2(static_cast<long>(a.size()));
  const double expected = sum_rows * sum_cols / total_pairs;
  const double maximum = 0.5 * (sum_rows + sum_cols);
  const double denom = maximum - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial and identical
  return (sum_cells - expected) / denom;
}

double macro_f1(const std::vector<int>& truth, const std::vector<int>& pred) {
  if (truth.size() != pred.size()) throw Error("macro_f1: size mismatch");
  std::set<int> classes(truth.begin(), truth.end());
  double f1_sum = 0.0;
  for (const int c : classes) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      if (pred[i] == c && truth[i] == c) ++tp;
      if (pred[i] == c && truth[i] != c) ++fp;
      if (pred[i] != c && truth[i] == c) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    f1_sum += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
  return f1_sum / static_cast<double>(classes.size());
}

RouterMetrics eval_router(const Decider& decider, const Dataset& eval,
                          const GroundTruth& truth) {
  if (eval.records.empty()) throw Error("eval_router: empty evaluation set");
  RouterMetrics metrics;
  metrics.routing_counts.assign(static_cast<std::size_t>(eval.pool_size()), 0);
  double quality_total = 0.0, oracle_total = 0.0, cost_total = 0.0;
  for (const auto& rec : eval.records) {
    const int chosen = decider(rec);
    if (chosen < 0 || chosen >= eval.pool_size())
      throw Error("eval_router: decider returned model index " + std::to_string(chosen));
    if (!truth.entries.count(rec.prompt_id))
      throw Error("eval_router: no ground truth for prompt '" + rec.prompt_id + "'");
    quality_total += rec.quality[chosen];
    // Per-prompt oracle: the best realized quality, so ratios never exceed 1.
    oracle_total += rec.quality.maxCoeff();
    cost_total += eval.pool[static_cast<std::size_t>(chosen)].cost_per_query;
    ++metrics.routing_counts[static_cast<std::size_t>(chosen)];
  }
  const double count = static_cast<double>(eval.records.size());
  metrics.mean_quality = quality_total / count;
  metrics.oracle_quality = oracle_total / count;
  metrics.oracle_ratio =
      metrics.oracle_quality == 0.0 ? 1.0 : metrics.mean_quality / metrics.oracle_quality;
  metrics.mean_cost = cost_total / count;
  return metrics;
}

std::vector<CostCurvePoint> cost_curve(const ServingState& state,
                                       const Dataset& eval, const GroundTruth& truth,
                                       const std::vector<double>& grid) {
  std::vector<CostCurvePoint> points;
  for (const double tolerance : grid) {
    if (tolerance < 0.0 || tolerance > 1.0)
      throw Error("cost_curve: grid values must lie in [0,1]");
    const auto decider = [&state, tolerance](const PromptRecord& rec) {
      return route_with_tolerance(state, rec.prompt_embedding, tolerance).chosen_model;
    };
    const RouterMetrics m = eval_router(decider, eval, truth);
    points.push_back({tolerance, m.mean_cost, m.mean_quality});
  }
  return points;
}

Decider baseline_knn(const Dataset& train, int k) {
  if (train.records.empty()) throw Error("baseline_knn: empty training data");
  if (k < 1) throw Error("baseline_knn: k must be >= 1");
  const auto records = std::make_shared<std::vector<PromptRecord>>(train.records);
  const int kk = std::min<int>(k, static_cast<int>(records->size()));
  const int n = train.pool_size();

  return [records, kk, n](const PromptRecord& query) {
    const double qnorm = query.prompt_embedding.norm();
    std::vector<std::pair<double, int>> sims;
    sims.reserve(records->size());
    for (std::size_t i = 0; i < records->size(); ++i) {
      const auto& rec = (*records)[i];
      const double rnorm = rec.prompt_embedding.norm();
      const double denom = qnorm * rnorm;
      const double cos =
          denom == 0.0 ? 0.0 : query.prompt_embedding.dot(rec.prompt_embedding) / denom;
      sims.emplace_back(cos, static_cast<int>(i));
    }
    std::partial_sort(sims.begin(), sims.begin() + kk, sims.end(),
                      [](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first > b.first;
                        return a.second < b.second;
                      });
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < kk; ++i)
      mean += (*records)[static_cast<std::size_t>(sims[i].second)].quality;
    int best = 0;
    for (int m = 1; m < n; ++m)
      if (mean[m] > mean[best]) best = m;
    return best;
  };
}

namespace {

// Small n-way softmax classifier used only by the MLP baseline.
struct SoftmaxMlp {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // classes x hidden
  Eigen::VectorXd b2;

  Eigen::VectorXd logits(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd hidden = (w1 * x + b1).cwiseMax(0.0);
    return w2 * hidden + b2;
  }
};

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const Eigen::VectorXd shifted = z.array() - z.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

}  // namespace

Decider baseline_mlp(const Dataset& train, const TrainSpec& spec, int hidden_dim) {
  spec.validate();
  if (train.records.empty()) throw Error("baseline_mlp: empty training data");
  const int n = train.pool_size();
  const int dim = train.prompt_dim();

  std::vector<int> labels(train.records.size());
  for (std::size_t i = 0; i < train.records.size(); ++i)
    labels[i] = ranked_list_from_quality(train.records[i].quality).order.front();

  Rng rng(mix_seed(spec.seed, 0xba5e));
  auto model = std::make_shared<SoftmaxMlp>();
  model->w1 = glorot_matrix(hidden_dim, dim, rng);
  model->b1 = Eigen::VectorXd::Zero(hidden_dim);
  model->w2 = glorot_matrix(n, hidden_dim, rng);
  model->b2 = Eigen::VectorXd::Zero(n);

  AdamState<Eigen::MatrixXd> opt_w1, opt_w2;
  AdamState<Eigen::VectorXd> opt_b1, opt_b2;
  long t = 0;

  std::vector<std::size_t> order(train.records.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    if (spec.shuffle) rng.shuffle(order);
    std::size_t pos = 0;
    double epoch_total = 0.0;
    while (pos < order.size()) {
      const std::size_t end =
          std::min(pos + static_cast<std::size_t>(spec.batch_size), order.size());
      Eigen::MatrixXd g_w1 = Eigen::MatrixXd::Zero(hidden_dim, dim);
      Eigen::VectorXd g_b1 = Eigen::VectorXd::Zero(hidden_dim);
      Eigen::MatrixXd g_w2 = Eigen::MatrixXd::Zero(n, hidden_dim);
      Eigen::VectorXd g_b2 = Eigen::VectorXd::Zero(n);
      for (std::size_t i = pos; i < end; ++i) {
        const auto& rec = train.records[order[i]];
        const Eigen::VectorXd z1 = model->w1 * rec.prompt_embedding + model->b1;
        const Eigen::VectorXd hidden = z1.cwiseMax(0.0);
        const Eigen::VectorXd probs = softmax(model->w2 * hidden + model->b2);
        const int y = labels[order[i]];
        epoch_total += -std::log(std::max(probs[y], 1e-12));
        Eigen::VectorXd dlogits = probs;
        dlogits[y] -= 1.0;
        g_w2 += dlogits * hidden.transpose();
        g_b2 += dlogits;
        Eigen::VectorXd dh = model->w2.transpose() * dlogits;
        for (Eigen::Index h = 0; h < dh.size(); ++h)
          if (z1[h] <= 0.0) dh[h] = 0.0;
        g_w1 += dh * rec.prompt_embedding.transpose();
        g_b1 += dh;
      }
      const double scale = 1.0 / static_cast<double>(end - pos);
      ++t;
      opt_w1.step(model->w1, (g_w1 * scale).eval(), spec.learning_rate, t);
      opt_b1.step(model->b1, (g_b1 * scale).eval(), spec.learning_rate, t);
      opt_w2.step(model->w2, (g_w2 * scale).eval(), spec.learning_rate, t);
      opt_b2.step(model->b2, (g_b2 * scale).eval(), spec.learning_rate, t);
      pos = end;
    }
    if (!std::isfinite(epoch_total))
      throw Error("baseline_mlp: loss diverged at epoch " + std::to_string(epoch));
  }

  return [model](const PromptRecord& query) {
    const Eigen::VectorXd z = model->logits(query.prompt_embedding);
    int best = 0;
    for (Eigen::Index m = 1; m < z.size(); ++m)
      if (z[m] > z[best]) best = static_cast<int>(m);
    return best;
  };
}

std::string metrics_csv(const RouterMetrics& metrics, const std::vector<ModelCard>& pool) {
  std::ostringstream out;
  out << "model_id,cost_per_query,routed_count,routed_fraction\n";
  long total = 0;
  for (const int c : metrics.routing_counts) total += c;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    out << pool[m].model_id << "," << pool[m].cost_per_query << ","
        << metrics.routing_counts[m] << ","
        << (total == 0 ? 0.0 : static_cast<double>(metrics.routing_counts[m]) /
                                   static_cast<double>(total))
        << "\n";
  }
  return out.str();
}

std::string cost_curve_csv(const std::vector<CostCurvePoint>& points) {
  std::ostringstream out;
  out << "tolerance,mean_cost,mean_quality\n";
  for (const auto& p : points)
    out << p.tolerance << "," << p.mean_cost << "," << p.mean_quality << "\n";
  return out.str();
}

void ArtifactCodec<GroundTruth>::encode(BinaryWriter& w, const GroundTruth& g) {
  w.u64(g.entries.size());
  for (const auto& [id, entry] : g.entries) {
    w.str(id);
    w.i64(entry.planted_task);
    w.vec(entry.true_mean_quality);
    w.i64(entry.oracle_choice);
  }
}

GroundTruth ArtifactCodec<GroundTruth>::decode(BinaryReader& r) {
  GroundTruth g;
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::string id = r.str();
    GroundTruthEntry entry;
    entry.planted_task = static_cast<int>(r.i64());
    entry.true_mean_quality = r.vec();
    entry.oracle_choice = static_cast<int>(r.i64());
    g.entries[std::move(id)] = std::move(entry);
  }
  return g;
}

}  // namespace taskroute
