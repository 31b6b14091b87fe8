#include "taskroute/router.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "taskroute/rng.hpp"

namespace taskroute {

namespace {

Eigen::VectorXd head_input(const RouterParams& p, const Eigen::VectorXd& projected,
                           int model) {
  Eigen::VectorXd x(projected.size() + p.model_embed.cols());
  x.head(projected.size()) = projected;
  x.tail(p.model_embed.cols()) = p.model_embed.row(model).transpose();
  return x;
}

}  // namespace

bool bitwise_equal(const RouterParams& a, const RouterParams& b) {
  auto mat_eq = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    return std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  if (!mat_eq(a.prompt_proj, b.prompt_proj) || !mat_eq(a.model_embed, b.model_embed))
    return false;
  if (a.general.size() != b.general.size()) return false;
  for (std::size_t i = 0; i < a.general.size(); ++i)
    if (!bitwise_equal(a.general[i], b.general[i])) return false;
  if (a.task_adapters.size() != b.task_adapters.size()) return false;
  auto it_a = a.task_adapters.begin();
  auto it_b = b.task_adapters.begin();
  for (; it_a != a.task_adapters.end(); ++it_a, ++it_b) {
    if (it_a->first != it_b->first) return false;
    if (!bitwise_equal(it_a->second, it_b->second)) return false;
  }
  return true;
}

RouterParams init_router(const std::vector<ModelCard>& pool,
                         const DiscoveryResult& result, const RouterDims& dims,
                         std::uint64_t seed) {
  if (pool.empty()) throw Error("init_router: empty model pool");
  if (dims.prompt_dim < 1 || dims.proj_dim < 1 || dims.embed_dim < 1 ||
      dims.hidden_dim < 1)
    throw Error("init_router: dimensions must be positive");
  if (result.pool_size != static_cast<int>(pool.size()))
    throw Error("init_router: discovery was built for a pool of " +
                std::to_string(result.pool_size) + " models, got " +
                std::to_string(pool.size()));

  RouterParams p;
  p.dims = dims;
  Rng rng(mix_seed(seed, 0x40052));
  p.prompt_proj = glorot_matrix(dims.proj_dim, dims.prompt_dim, rng);
  p.model_embed = glorot_matrix(static_cast<int>(pool.size()), dims.embed_dim, rng);
  const int head_in = dims.proj_dim + dims.embed_dim;
  p.general.reserve(pool.size());
  for (std::size_t m = 0; m < pool.size(); ++m)
    p.general.push_back(init_mlp(head_in, dims.hidden_dim, rng));
  for (const auto& cluster : result.clusters)
    for (const int m : cluster.candidates)
      p.task_adapters.emplace(std::make_pair(cluster.task_id, m),
                              init_mlp(head_in, dims.hidden_dim, rng));
  return p;
}

TrainTrace train_base(RouterParams& params, const Dataset& train,
                      const TrainSpec& spec) {
  spec.validate();
  if (train.records.empty()) throw Error("train_base: empty training data");
  const int n = params.pool_size();
  if (train.pool_size() != n)
    throw Error("train_base: dataset pool size does not match router");

  const double pair_count =
      static_cast<double>(train.records.size()) * static_cast<double>(n);
  auto mse_mean = [&]() {
    double total = 0.0;
    for (const auto& rec : train.records) {
      const Eigen::VectorXd projected = params.prompt_proj * rec.prompt_embedding;
      for (int m = 0; m < n; ++m) {
        const double y = mlp_forward(params.general[m], head_input(params, projected, m));
        total += (y - rec.quality[m]) * (y - rec.quality[m]);
      }
    }
    return total / pair_count;
  };

  TrainTrace trace;
  trace.initial_loss = mse_mean();

  Rng rng(spec.seed);
  AdamState<Eigen::MatrixXd> opt_proj, opt_embed;
  std::vector<MlpAdam> opt_heads(n);
  long t = 0;

  std::vector<std::size_t> order(train.records.size());
  std::iota(order.begin(), order.end(), 0);
  const int proj_dim = params.dims.proj_dim;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    if (spec.shuffle) rng.shuffle(order);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t end =
          std::min(pos + static_cast<std::size_t>(spec.batch_size), order.size());
      Eigen::MatrixXd grad_proj = Eigen::MatrixXd::Zero(params.prompt_proj.rows(),
                                                        params.prompt_proj.cols());
      Eigen::MatrixXd grad_embed =
          Eigen::MatrixXd::Zero(params.model_embed.rows(), params.model_embed.cols());
      std::vector<MlpGrad> grad_heads(n);
      for (int m = 0; m < n; ++m) {
        grad_heads[m].w1 = Eigen::MatrixXd::Zero(params.general[m].w1.rows(),
                                                 params.general[m].w1.cols());
        grad_heads[m].b1 = Eigen::VectorXd::Zero(params.general[m].b1.size());
        grad_heads[m].w2 = Eigen::RowVectorXd::Zero(params.general[m].w2.cols());
        grad_heads[m].b2 = 0.0;
      }

      for (std::size_t i = pos; i < end; ++i) {
        const auto& rec = train.records[order[i]];
        const Eigen::VectorXd projected = params.prompt_proj * rec.prompt_embedding;
        Eigen::VectorXd grad_projected = Eigen::VectorXd::Zero(proj_dim);
        for (int m = 0; m < n; ++m) {
          Eigen::VectorXd grad_x;
          const MlpGrad g = mlp_grad(params.general[m],
                                     head_input(params, projected, m),
                                     rec.quality[m], nullptr, &grad_x);
          grad_heads[m].w1 += g.w1;
          grad_heads[m].b1 += g.b1;
          grad_heads[m].w2 += g.w2;
          grad_heads[m].b2 += g.b2;
          grad_projected += grad_x.head(proj_dim);
          grad_embed.row(m) += grad_x.tail(params.dims.embed_dim).transpose();
        }
        grad_proj += grad_projected * rec.prompt_embedding.transpose();
      }

      const double scale =
          1.0 / (static_cast<double>(end - pos) * static_cast<double>(n));
      grad_proj *= scale;
      grad_embed *= scale;
      ++t;
      opt_proj.step(params.prompt_proj, grad_proj, spec.learning_rate, t);
      opt_embed.step(params.model_embed, grad_embed, spec.learning_rate, t);
      for (int m = 0; m < n; ++m) {
        grad_heads[m].w1 *= scale;
        grad_heads[m].b1 *= scale;
        grad_heads[m].w2 *= scale;
        grad_heads[m].b2 *= scale;
        opt_heads[m].step(params.general[m], grad_heads[m], spec.learning_rate);
      }
      pos = end;
    }
    const double epoch_mean = mse_mean();
    if (!std::isfinite(epoch_mean))
      throw Error("train_base: loss diverged at epoch " + std::to_string(epoch));
    trace.epoch_loss.push_back(epoch_mean);
  }
  return trace;
}

AdapterTrainReport train_task_adapters(RouterParams& params, const Dataset& train,
                                       const ClassifierParams& clf,
                                       double classifier_threshold,
                                       const TrainSpec& spec) {
  spec.validate();
  if (train.records.empty()) throw Error("train_task_adapters: empty training data");
  const int n = params.pool_size();
  if (train.pool_size() != n)
    throw Error("train_task_adapters: dataset pool size does not match router");

  // Relabel with the classifier, mirroring inference-time behavior.
  std::map<int, std::vector<int>> records_of_task;
  AdapterTrainReport report;
  for (std::size_t i = 0; i < train.records.size(); ++i) {
    const TaskAssignment a =
        classify(clf, train.records[i].prompt_embedding, classifier_threshold);
    if (a.assigned()) {
      records_of_task[a.task_id].push_back(static_cast<int>(i));
      ++report.records_per_task[a.task_id];
    }
  }

  // The trunk is frozen, so each adapter trains on precomputed head inputs.
  for (auto& [key, adapter] : params.task_adapters) {
    const auto& [task, model] = key;
    adapter = params.general[static_cast<std::size_t>(model)];  // clone init
    const auto it = records_of_task.find(task);
    if (it == records_of_task.end() || it->second.empty()) {
      report.untrained.push_back(key);
      continue;
    }
    std::vector<std::pair<Eigen::VectorXd, double>> data;
    data.reserve(it->second.size());
    for (const int idx : it->second) {
      const auto& rec = train.records[static_cast<std::size_t>(idx)];
      const Eigen::VectorXd projected = params.prompt_proj * rec.prompt_embedding;
      data.emplace_back(head_input(params, projected, model), rec.quality[model]);
    }
    TrainSpec adapter_spec = spec;
    adapter_spec.seed = mix_seed(spec.seed, 0xada0000ull +
                                 static_cast<std::uint64_t>(task) * 4096ull +
                                 static_cast<std::uint64_t>(model));
    report.traces[key] = train_mlp(adapter, data, adapter_spec);
  }
  return report;
}

QualityEstimate estimate(const RouterParams& params,
                         const Eigen::VectorXd& prompt_embedding,
                         const TaskAssignment& assignment) {
  if (prompt_embedding.size() != params.prompt_proj.cols())
    throw Error("estimate: embedding has dimension " +
                std::to_string(prompt_embedding.size()) + ", expected " +
                std::to_string(params.prompt_proj.cols()));
  const int n = params.pool_size();
  const Eigen::VectorXd projected = params.prompt_proj * prompt_embedding;

  QualityEstimate out;
  out.scores.resize(n);
  out.provenance.assign(static_cast<std::size_t>(n), HeadKind::General);

  int task = assignment.task_id;
  if (task >= 0) {
    // Unknown task ids (no adapters registered) degrade to the general path.
    const auto lo = params.task_adapters.lower_bound({task, 0});
    if (lo == params.task_adapters.end() || lo->first.first != task) {
      task = -1;
      out.unknown_task = true;
    }
  }

  for (int m = 0; m < n; ++m) {
    const MlpParams* head = &params.general[static_cast<std::size_t>(m)];
    if (task >= 0) {
      const auto it = params.task_adapters.find({task, m});
      if (it != params.task_adapters.end()) {
        head = &it->second;
        out.provenance[static_cast<std::size_t>(m)] = HeadKind::TaskSpecific;
      }
    }
    out.scores[m] = mlp_forward(*head, head_input(params, projected, m));
    ++out.head_evaluations;
  }
  return out;
}

std::string AdapterTrainReport::render() const {
  std::ostringstream out;
  out << "records per task:\n";
  for (const auto& [task, count] : records_per_task)
    out << "  task " << task << ": " << count << "\n";
  out << "adapter final losses:\n";
  for (const auto& [key, trace] : traces) {
    out << "  (task " << key.first << ", model " << key.second << "): ";
    if (trace.epoch_loss.empty())
      out << "no epochs\n";
    else
      out << trace.initial_loss << " -> " << trace.epoch_loss.back() << "\n";
  }
  if (!untrained.empty()) {
    out << "untrained adapters (kept at clone init):\n";
    for (const auto& [task, model] : untrained)
      out << "  (task " << task << ", model " << model << ")\n";
  }
  return out.str();
}

void ArtifactCodec<RouterParams>::encode(BinaryWriter& w, const RouterParams& p) {
  w.i64(p.dims.prompt_dim);
  w.i64(p.dims.proj_dim);
  w.i64(p.dims.embed_dim);
  w.i64(p.dims.hidden_dim);
  w.mat(p.prompt_proj);
  w.mat(p.model_embed);
  auto put_mlp = [&w](const MlpParams& m) {
    w.mat(m.w1);
    w.vec(m.b1);
    w.mat(m.w2);
    w.f64(m.b2);
  };
  w.u64(p.general.size());
  for (const auto& head : p.general) put_mlp(head);
  w.u64(p.task_adapters.size());
  for (const auto& [key, adapter] : p.task_adapters) {
    w.i64(key.first);
    w.i64(key.second);
    put_mlp(adapter);
  }
}

RouterParams ArtifactCodec<RouterParams>::decode(BinaryReader& r) {
  RouterParams p;
  p.dims.prompt_dim = static_cast<int>(r.i64());
  p.dims.proj_dim = static_cast<int>(r.i64());
  p.dims.embed_dim = static_cast<int>(r.i64());
  p.dims.hidden_dim = static_cast<int>(r.i64());
  p.prompt_proj = r.mat();
  p.model_embed = r.mat();
  auto get_mlp = [&r]() {
    MlpParams m;
    m.w1 = r.mat();
    m.b1 = r.vec();
    m.w2 = r.mat();
    m.b2 = r.f64();
    return m;
  };
  const std::uint64_t n_general = r.u64();
  for (std::uint64_t i = 0; i < n_general; ++i) p.general.push_back(get_mlp());
  const std::uint64_t n_adapters = r.u64();
  for (std::uint64_t i = 0; i < n_adapters; ++i) {
    const int task = static_cast<int>(r.i64());
    const int model = static_cast<int>(r.i64());
    p.task_adapters.emplace(std::make_pair(task, model), get_mlp());
  }
  return p;
}

}  // namespace taskroute
