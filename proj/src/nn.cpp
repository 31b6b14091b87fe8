#include "taskroute/nn.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "taskroute/types.hpp"

namespace taskroute {

bool bitwise_equal(const MlpParams& a, const MlpParams& b) {
  auto mat_eq = [](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    return std::memcmp(x.data(), y.data(), sizeof(double) * x.size()) == 0;
  };
  return mat_eq(a.w1, b.w1) && mat_eq(a.b1, b.b1) && mat_eq(a.w2, b.w2) &&
         std::memcmp(&a.b2, &b.b2, sizeof(double)) == 0;
}

void TrainSpec::validate() const {
  if (!(learning_rate > 0.0)) throw Error("train spec: learning_rate must be positive");
  if (epochs < 0) throw Error("train spec: epochs must be nonnegative");
  if (batch_size < 1) throw Error("train spec: batch_size must be positive");
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::MatrixXd glorot_matrix(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

MlpParams init_mlp(int input_dim, int hidden_dim, Rng& rng) {
  MlpParams p;
  p.w1 = glorot_matrix(hidden_dim, input_dim, rng);
  p.b1 = Eigen::VectorXd::Zero(hidden_dim);
  p.w2 = glorot_matrix(1, hidden_dim, rng);
  p.b2 = 0.0;
  return p;
}

double mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.w1.cols())
    throw Error("mlp_forward: input has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(p.w1.cols()));
  const Eigen::VectorXd hidden = (p.w1 * x + p.b1).cwiseMax(0.0);
  return logistic(p.w2.dot(hidden) + p.b2);
}

MlpGrad mlp_grad(const MlpParams& p, const Eigen::VectorXd& x, double target,
                 double* out, Eigen::VectorXd* input_grad) {
  if (x.size() != p.w1.cols())
    throw Error("mlp_grad: input has dimension " + std::to_string(x.size()) +
                ", expected " + std::to_string(p.w1.cols()));
  const Eigen::VectorXd z1 = p.w1 * x + p.b1;
  const Eigen::VectorXd hidden = z1.cwiseMax(0.0);
  const double y = logistic(p.w2.dot(hidden) + p.b2);
  if (out) *out = y;

  // d(y - t)^2 / dz2, with dy/dz2 = y(1-y)
  const double g2 = 2.0 * (y - target) * y * (1.0 - y);

  MlpGrad g;
  g.w2 = g2 * hidden.transpose();
  g.b2 = g2;
  Eigen::VectorXd dz1 = (p.w2.transpose() * g2);
  for (Eigen::Index i = 0; i < dz1.size(); ++i)
    if (z1[i] <= 0.0) dz1[i] = 0.0;
  g.w1 = dz1 * x.transpose();
  g.b1 = dz1;
  if (input_grad) *input_grad = p.w1.transpose() * dz1;
  return g;
}

void MlpAdam::step(MlpParams& p, const MlpGrad& g, double lr, const MlpFreeze& freeze) {
  ++t;
  if (!freeze.w1) w1.step(p.w1, g.w1, lr, t);
  if (!freeze.b1) b1.step(p.b1, g.b1, lr, t);
  if (!freeze.w2) w2.step(p.w2, g.w2, lr, t);
  if (!freeze.b2) b2.step(p.b2, g.b2, lr, t);
}

namespace {

double mean_loss(const MlpParams& p,
                 const std::vector<std::pair<Eigen::VectorXd, double>>& data) {
  double total = 0.0;
  for (const auto& [x, target] : data) {
    const double y = mlp_forward(p, x);
    total += (y - target) * (y - target);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

TrainTrace train_mlp(MlpParams& params,
                     const std::vector<std::pair<Eigen::VectorXd, double>>& data,
                     const TrainSpec& spec, const MlpFreeze& freeze) {
  spec.validate();
  if (data.empty()) throw Error("train_mlp: empty training data");

  TrainTrace trace;
  trace.initial_loss = mean_loss(params, data);

  Rng rng(spec.seed);
  MlpAdam opt;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    if (spec.shuffle) rng.shuffle(order);
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t end = std::min(pos + static_cast<std::size_t>(spec.batch_size),
                                       order.size());
      MlpGrad acc;
      acc.w1 = Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols());
      acc.b1 = Eigen::VectorXd::Zero(params.b1.size());
      acc.w2 = Eigen::RowVectorXd::Zero(params.w2.cols());
      acc.b2 = 0.0;
      for (std::size_t i = pos; i < end; ++i) {
        const auto& [x, target] = data[order[i]];
        const MlpGrad g = mlp_grad(params, x, target);
        acc.w1 += g.w1;
        acc.b1 += g.b1;
        acc.w2 += g.w2;
        acc.b2 += g.b2;
      }
      const double scale = 1.0 / static_cast<double>(end - pos);
      acc.w1 *= scale;
      acc.b1 *= scale;
      acc.w2 *= scale;
      acc.b2 *= scale;
      if (!freeze.everything()) opt.step(params, acc, spec.learning_rate, freeze);
      pos = end;
    }
    // End-of-epoch evaluation in dataset order keeps the trace independent
    // of the shuffle.
    const double epoch_mean = mean_loss(params, data);
    if (!std::isfinite(epoch_mean))
      throw Error("train_mlp: loss diverged to a non-finite value at epoch " +
                  std::to_string(epoch));
    trace.epoch_loss.push_back(epoch_mean);
  }
  return trace;
}

Eigen::VectorXd minmax_norm(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw Error("minmax_norm: empty vector");
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw Error("minmax_norm: non-finite entry");
  const double lo = v.minCoeff();
  const double hi = v.maxCoeff();
  if (hi == lo) return Eigen::VectorXd::Constant(v.size(), 0.5);
  return (v.array() - lo) / (hi - lo);
}

double finite_difference_check(const std::function<double()>& loss,
                               const std::vector<double*>& params,
                               const std::vector<double>& analytic,
                               double step) {
  if (params.size() != analytic.size())
    throw Error("finite_difference_check: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = *params[i];
    *params[i] = saved + step;
    const double up = loss();
    *params[i] = saved - step;
    const double down = loss();
    *params[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max(1.0, std::abs(numeric) + std::abs(analytic[i]));
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

std::vector<double*> flatten_params(MlpParams& p) {
  std::vector<double*> out;
  out.reserve(static_cast<std::size_t>(p.w1.size() + p.b1.size() + p.w2.size()) + 1);
  for (Eigen::Index i = 0; i < p.w1.size(); ++i) out.push_back(p.w1.data() + i);
  for (Eigen::Index i = 0; i < p.b1.size(); ++i) out.push_back(p.b1.data() + i);
  for (Eigen::Index i = 0; i < p.w2.size(); ++i) out.push_back(p.w2.data() + i);
  out.push_back(&p.b2);
  return out;
}

std::vector<double> flatten_grad(const MlpGrad& g) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(g.w1.size() + g.b1.size() + g.w2.size()) + 1);
  for (Eigen::Index i = 0; i < g.w1.size(); ++i) out.push_back(g.w1.data()[i]);
  for (Eigen::Index i = 0; i < g.b1.size(); ++i) out.push_back(g.b1.data()[i]);
  for (Eigen::Index i = 0; i < g.w2.size(); ++i) out.push_back(g.w2.data()[i]);
  out.push_back(g.b2);
  return out;
}

}  // namespace taskroute
