#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "taskroute/rng.hpp"

namespace taskroute {

// Two-layer perceptron with a rectifier hidden layer and a logistic scalar
// output, the shape both quality heads and adapters use.
struct MlpParams {
  Eigen::MatrixXd w1;     // hidden x in
  Eigen::VectorXd b1;     // hidden
  Eigen::RowVectorXd w2;  // 1 x hidden
  double b2 = 0.0;

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
};

struct MlpGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::RowVectorXd w2;
  double b2 = 0.0;
};

bool bitwise_equal(const MlpParams& a, const MlpParams& b);

struct TrainSpec {
  double learning_rate = 1e-3;
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

// Per-tensor freeze flags; frozen tensors stay bit-identical through training.
struct MlpFreeze {
  bool w1 = false;
  bool b1 = false;
  bool w2 = false;
  bool b2 = false;

  static MlpFreeze all() { return {true, true, true, true}; }
  bool everything() const { return w1 && b1 && w2 && b2; }
};

struct TrainTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // mean loss per epoch
};

double logistic(double z);

// Uniform Glorot init in +-sqrt(6/(fan_in+fan_out)); fan_out = rows,
// fan_in = cols for a weight applied as W*x.
Eigen::MatrixXd glorot_matrix(int rows, int cols, Rng& rng);

MlpParams init_mlp(int input_dim, int hidden_dim, Rng& rng);

double mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

// Analytic gradient of (forward(x) - target)^2 with respect to all params.
// If out/input_grad are given, the forward value and the gradient with
// respect to x are written there (the trunk backprop path).
MlpGrad mlp_grad(const MlpParams& p, const Eigen::VectorXd& x, double target,
                 double* out = nullptr, Eigen::VectorXd* input_grad = nullptr);

// Adam first/second moment state shaped like one tensor.
template <class Tensor>
struct AdamState {
  Tensor m, v;
  bool initialized = false;

  void step(Tensor& param, const Tensor& grad, double lr, long t,
            double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    if (!initialized) {
      m = Tensor::Zero(param.rows(), param.cols());
      v = Tensor::Zero(param.rows(), param.cols());
      initialized = true;
    }
    m = beta1 * m + (1.0 - beta1) * grad;
    v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

struct AdamScalar {
  double m = 0.0, v = 0.0;

  void step(double& param, double grad, double lr, long t,
            double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad * grad;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param -= lr * (m / c1) / (std::sqrt(v / c2) + eps);
  }
};

struct MlpAdam {
  AdamState<Eigen::MatrixXd> w1;
  AdamState<Eigen::VectorXd> b1;
  AdamState<Eigen::RowVectorXd> w2;
  AdamScalar b2;
  long t = 0;

  void step(MlpParams& p, const MlpGrad& g, double lr, const MlpFreeze& freeze = {});
};

// Mini-batch Adam training on (x, target) pairs with squared-error loss.
// Throws on a non-finite loss. Returns the per-epoch mean loss trace.
TrainTrace train_mlp(MlpParams& params,
                     const std::vector<std::pair<Eigen::VectorXd, double>>& data,
                     const TrainSpec& spec, const MlpFreeze& freeze = {});

// Min-max normalization to [0,1]; a constant vector maps to all 0.5.
Eigen::VectorXd minmax_norm(const Eigen::VectorXd& v);

// Central finite-difference check. `loss` re-evaluates the objective after
// `params` entries are perturbed in place; `analytic` is aligned with
// `params`. Returns the max relative deviation.
double finite_difference_check(const std::function<double()>& loss,
                               const std::vector<double*>& params,
                               const std::vector<double>& analytic,
                               double step = 1e-5);

// Flattened pointer/gradient views used by the finite-difference checker.
std::vector<double*> flatten_params(MlpParams& p);
std::vector<double> flatten_grad(const MlpGrad& g);

}  // namespace taskroute
