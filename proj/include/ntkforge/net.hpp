#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ntkforge/activation.hpp"
#include "ntkforge/dataset.hpp"
#include "ntkforge/kernel.hpp"

namespace ntkforge {

struct NetworkConfig {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_widths;
  std::vector<LayerScales> scales;  // one per weight layer: hidden layers + readout
  ActivationSpec activation;
  std::uint64_t seed = 0;

  int depth() const { return static_cast<int>(hidden_widths.size()); }
  // sum_l n_l n_{l-1} + sum_l n_l over all weight layers
  long long parameter_count() const;
};

// Trainable parameters in the NTK parameterization: weights are realized as
// (sigma_w / sqrt(n_{l-1})) * omega with omega ~ N(0,1), biases as
// sigma_b * beta. Gradient descent acts on omega and beta. The initial
// parameters are kept for centering.
struct NetworkState {
  NetworkConfig cfg;
  std::vector<Eigen::MatrixXd> omega;  // layer l: n_l x n_{l-1}
  std::vector<Eigen::VectorXd> beta;   // layer l: n_l
  std::vector<Eigen::MatrixXd> omega0;
  std::vector<Eigen::VectorXd> beta0;
};

NetworkState init(const NetworkConfig& cfg);

// Activations and preactivations kept for the backward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;  // z^(1) .. z^(L) (hidden preactivations)
  std::vector<Eigen::MatrixXd> act;  // x^(0) = input .. x^(L)
};

// Batch forward pass; X holds one sample per column (d x N), the result is
// o x N. With check_finite, a non-finite activation raises an error naming
// the layer.
Eigen::MatrixXd forward(const NetworkState& state, const Eigen::MatrixXd& X,
                        ForwardCache* cache = nullptr, bool check_finite = true,
                        bool use_initial_params = false);

struct Gradients {
  std::vector<Eigen::MatrixXd> d_omega;
  std::vector<Eigen::VectorXd> d_beta;
};

// Exact gradients of a scalar loss with respect to omega and beta given the
// loss gradient at the outputs (o x N) and the cache of the same forward
// pass.
Gradients grad(const NetworkState& state, const ForwardCache& cache,
               const Eigen::MatrixXd& dLdF);

// Empirical NTK: the Gram matrix of parameter gradients of one output
// coordinate, K[i,j] = grad f(x1_i) . grad f(x2_j). Inner products are
// accumulated layer by layer from activations and backpropagated deltas, so
// per-sample parameter gradients are never materialized. Requests whose
// working set would exceed memory_budget_bytes are rejected with a pointer
// to the averaging protocol (average kernels of several narrower nets).
Eigen::MatrixXd empirical_ntk(const NetworkState& state, const Eigen::MatrixXd& X1,
                              const Eigen::MatrixXd& X2, int output_index = 0,
                              std::size_t memory_budget_bytes = std::size_t(4) << 30);

struct TrainOptions {
  double lr = 0.1;
  int max_epochs = 10000;
  double stop_mse = 1e-3;
  bool centered = true;
  // Metrics every epoch up to record_dense_until, then every record_interval.
  int record_dense_until = 1000;
  int record_interval = 10;
};

// Per-epoch metrics of one full-batch gradient-descent run. MSE carries no
// 1/2 factor: mean over samples of the squared output-error norm.
struct TrainRecord {
  std::vector<int> epochs;
  std::vector<double> train_mse, test_mse, train_acc, test_acc;
  std::string stop_reason;  // train_mse_below_threshold | epoch_cap | non_finite_loss
  int epochs_run = 0;

  double final_train_mse() const { return train_mse.empty() ? 0.0 : train_mse.back(); }
  double final_test_mse() const { return test_mse.empty() ? 0.0 : test_mse.back(); }
  double final_train_acc() const { return train_acc.empty() ? 0.0 : train_acc.back(); }
  double final_test_acc() const { return test_acc.empty() ? 0.0 : test_acc.back(); }
  bool diverged() const { return stop_reason == "non_finite_loss"; }

  void write_csv(const std::string& path) const;
};

// Full-batch gradient descent on the mean-squared-error objective with the
// conventional 1/2 prefactor; all recorded metrics and stop thresholds use
// the 1/2-free MSE above. When centered, the model prediction is
// f_t(x) - f_0(x) everywhere, including all recorded metrics. Stops on train
// MSE below stop_mse, the epoch cap, or a non-finite loss (recorded with the
// epoch index, not masked).
TrainRecord train(NetworkState& state, const Dataset& train_data, const Dataset* test_data,
                  const TrainOptions& opts);

}  // namespace ntkforge
