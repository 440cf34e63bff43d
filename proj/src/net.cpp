#include "ntkforge/net.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace ntkforge {

long long NetworkConfig::parameter_count() const {
  long long total = 0;
  int prev = input_dim;
  for (int w : hidden_widths) {
    total += static_cast<long long>(w) * prev + w;
    prev = w;
  }
  total += static_cast<long long>(output_dim) * prev + output_dim;
  return total;
}

namespace {

void validate_config(const NetworkConfig& cfg) {
  if (cfg.input_dim < 1 || cfg.output_dim < 1) {
    throw std::invalid_argument("NetworkConfig: dimensions must be >= 1");
  }
  for (int w : cfg.hidden_widths) {
    if (w < 1) throw std::invalid_argument("NetworkConfig: widths must be >= 1");
  }
  if (cfg.scales.size() != cfg.hidden_widths.size() + 1) {
    throw std::invalid_argument("NetworkConfig: need one LayerScales per weight layer");
  }
  for (const LayerScales& s : cfg.scales) {
    if (!(s.sigma_w > 0.0) || s.sigma_b < 0.0) {
      throw std::invalid_argument("NetworkConfig: sigma_w > 0 and sigma_b >= 0 required");
    }
  }
}

// Elementwise activation (or its derivative) with the variant dispatched
// once per matrix, not once per entry.
Eigen::MatrixXd apply_act(const ActivationSpec& act, const Eigen::MatrixXd& Z, bool deriv) {
  Eigen::MatrixXd out;
  if (const auto* s = std::get_if<hermite::HermiteSeries>(&act.form)) {
    const hermite::HermiteSeries series = deriv ? hermite::series_derivative(*s) : *s;
    const auto& b = series.coeffs;
    out = Eigen::MatrixXd::Constant(Z.rows(), Z.cols(), b.empty() ? 0.0 : b[0]);
    if (b.size() > 1) {
      Eigen::ArrayXXd hm2 = Eigen::ArrayXXd::Ones(Z.rows(), Z.cols());
      Eigen::ArrayXXd hm1 = Z.array();
      out.array() += b[1] * hm1;
      for (int j = 2; j < static_cast<int>(b.size()); ++j) {
        const Eigen::ArrayXXd h =
            Z.array() * hm1 / std::sqrt(static_cast<double>(j)) - std::sqrt((j - 1.0) / j) * hm2;
        if (b[j] != 0.0) out.array() += b[j] * h;
        hm2.swap(hm1);
        hm1 = h;
      }
    }
  } else if (const auto* n = std::get_if<NamedSpec>(&act.form)) {
    const double a = n->a;
    switch (n->kind) {
      case NamedActivation::Exp:
        if (deriv) {
          out = a * (a * Z.array()).exp();
        } else {
          out = (a * Z.array()).exp();
        }
        break;
      case NamedActivation::Sin:
        if (deriv) {
          out = a * (a * Z.array()).cos();
        } else {
          out = (a * Z.array()).sin();
        }
        break;
      case NamedActivation::Cos:
        if (deriv) {
          out = -a * (a * Z.array()).sin();
        } else {
          out = (a * Z.array()).cos();
        }
        break;
      case NamedActivation::Relu:
        if (deriv) {
          out = (Z.array() > 0.0).cast<double>();
        } else {
          out = Z.cwiseMax(0.0);
        }
        break;
      case NamedActivation::Erf:
        if (deriv) {
          out = 2.0 / std::sqrt(M_PI) * (-Z.array().square()).exp();
        } else {
          out = Z.unaryExpr([](double z) { return std::erf(z); });
        }
        break;
    }
  } else if (const auto* p = std::get_if<AnsatzParams>(&act.form)) {
    if (deriv) {
      out = (p->alpha * (Z.array() > p->beta).cast<double>() -
             p->gamma * p->delta * (p->delta * Z.array() + p->epsilon).sin() + p->zeta)
                .matrix();
    } else {
      out = (p->alpha * (Z.array() - p->beta).max(0.0) +
             p->gamma * (p->delta * Z.array() + p->epsilon).cos() + p->zeta * Z.array() + p->eta)
                .matrix();
    }
  } else {
    const auto& cu = std::get<CustomActivation>(act.form);
    const auto& f = deriv ? cu.df : cu.f;
    out = Z.unaryExpr([&f](double z) { return f(z); });
  }
  if (act.prefactor != 1.0) out *= act.prefactor;
  return out;
}

}  // namespace

NetworkState init(const NetworkConfig& cfg) {
  validate_config(cfg);
  NetworkState state;
  state.cfg = cfg;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int L = cfg.depth();
  int prev = cfg.input_dim;
  for (int l = 0; l <= L; ++l) {
    const int n = l < L ? cfg.hidden_widths[l] : cfg.output_dim;
    Eigen::MatrixXd w(n, prev);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < prev; ++j) w(i, j) = gauss(rng);
    }
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = gauss(rng);
    state.omega.push_back(std::move(w));
    state.beta.push_back(std::move(b));
    prev = n;
  }
  state.omega0 = state.omega;
  state.beta0 = state.beta;
  return state;
}

Eigen::MatrixXd forward(const NetworkState& state, const Eigen::MatrixXd& X, ForwardCache* cache,
                        bool check_finite, bool use_initial_params) {
  const NetworkConfig& cfg = state.cfg;
  if (X.rows() != cfg.input_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  const auto& omega = use_initial_params ? state.omega0 : state.omega;
  const auto& beta = use_initial_params ? state.beta0 : state.beta;
  const int L = cfg.depth();
  if (cache) {
    cache->pre.assign(L, Eigen::MatrixXd());
    cache->act.assign(L + 1, Eigen::MatrixXd());
    cache->act[0] = X;
  }

  Eigen::MatrixXd cur = X;
  for (int l = 0; l <= L; ++l) {
    const double wscale = cfg.scales[l].sigma_w / std::sqrt(static_cast<double>(cur.rows()));
    Eigen::MatrixXd z = wscale * (omega[l] * cur);
    if (cfg.scales[l].sigma_b != 0.0) {
      z.colwise() += cfg.scales[l].sigma_b * beta[l];
    }
    if (check_finite && !z.allFinite()) {
      throw std::runtime_error("forward: non-finite preactivation at layer " + std::to_string(l + 1));
    }
    if (l < L) {
      if (cache) cache->pre[l] = z;
      cur = apply_act(cfg.activation, z, false);
      if (check_finite && !cur.allFinite()) {
        throw std::runtime_error("forward: non-finite activation at layer " + std::to_string(l + 1));
      }
      if (cache) cache->act[l + 1] = cur;
    } else {
      cur = std::move(z);
    }
  }
  return cur;
}

Gradients grad(const NetworkState& state, const ForwardCache& cache,
               const Eigen::MatrixXd& dLdF) {
  const NetworkConfig& cfg = state.cfg;
  const int L = cfg.depth();
  if (static_cast<int>(cache.act.size()) != L + 1) {
    throw std::invalid_argument("grad: forward cache missing");
  }
  Gradients g;
  g.d_omega.resize(L + 1);
  g.d_beta.resize(L + 1);
  Eigen::MatrixXd delta = dLdF;
  for (int l = L; l >= 0; --l) {
    const double wscale =
        cfg.scales[l].sigma_w / std::sqrt(static_cast<double>(cache.act[l].rows()));
    g.d_omega[l] = wscale * (delta * cache.act[l].transpose());
    g.d_beta[l] = cfg.scales[l].sigma_b * delta.rowwise().sum();
    if (l > 0) {
      delta = (wscale * (state.omega[l].transpose() * delta))
                  .cwiseProduct(apply_act(cfg.activation, cache.pre[l - 1], true));
    }
  }
  return g;
}

namespace {

struct NtkSideCache {
  std::vector<Eigen::MatrixXd> act;    // inputs to each weight layer
  std::vector<Eigen::MatrixXd> delta;  // d f_out / d z at each weight layer output
};

NtkSideCache ntk_cache(const NetworkState& state, const Eigen::MatrixXd& X, int output_index) {
  const NetworkConfig& cfg = state.cfg;
  const int L = cfg.depth();
  ForwardCache fc;
  forward(state, X, &fc);

  NtkSideCache side;
  side.act = fc.act;
  side.delta.assign(L + 1, Eigen::MatrixXd());
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(cfg.output_dim, X.cols());
  delta.row(output_index).setOnes();
  for (int l = L; l >= 0; --l) {
    side.delta[l] = delta;
    if (l > 0) {
      const double wscale =
          cfg.scales[l].sigma_w / std::sqrt(static_cast<double>(fc.act[l].rows()));
      delta = (wscale * (state.omega[l].transpose() * delta))
                  .cwiseProduct(apply_act(cfg.activation, fc.pre[l - 1], true));
    }
  }
  return side;
}

}  // namespace

Eigen::MatrixXd empirical_ntk(const NetworkState& state, const Eigen::MatrixXd& X1,
                              const Eigen::MatrixXd& X2, int output_index,
                              std::size_t memory_budget_bytes) {
  const NetworkConfig& cfg = state.cfg;
  if (output_index < 0 || output_index >= cfg.output_dim) {
    throw std::invalid_argument("empirical_ntk: output coordinate out of range");
  }
  long long units = cfg.input_dim + cfg.output_dim;
  for (int w : cfg.hidden_widths) units += 2LL * w;
  const long long bytes = 16LL * units * (X1.cols() + X2.cols());
  if (bytes > static_cast<long long>(memory_budget_bytes)) {
    throw std::runtime_error(
        "empirical_ntk: request needs ~" + std::to_string(bytes >> 20) +
        " MiB of activation storage, over budget; average the kernels of several "
        "narrower or fewer-sample nets instead");
  }

  const NtkSideCache side1 = ntk_cache(state, X1, output_index);
  const bool same = (&X1 == &X2) || (X1.data() == X2.data() && X1.rows() == X2.rows() &&
                                     X1.cols() == X2.cols());
  const NtkSideCache side2 = same ? side1 : ntk_cache(state, X2, output_index);

  const int L = cfg.depth();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(X1.cols(), X2.cols());
  for (int l = 0; l <= L; ++l) {
    const double sw2 = cfg.scales[l].sigma_w * cfg.scales[l].sigma_w;
    const double sb2 = cfg.scales[l].sigma_b * cfg.scales[l].sigma_b;
    const Eigen::MatrixXd gram_delta = side1.delta[l].transpose() * side2.delta[l];
    const Eigen::MatrixXd gram_act = side1.act[l].transpose() * side2.act[l];
    K.noalias() += (sw2 / side1.act[l].rows()) * gram_act.cwiseProduct(gram_delta);
    if (sb2 != 0.0) K.noalias() += sb2 * gram_delta;
  }
  return K;
}

namespace {

double accuracy_of(TaskKind kind, const Eigen::MatrixXd& F, const Eigen::MatrixXd& Y) {
  const int n = static_cast<int>(F.cols());
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  switch (kind) {
    case TaskKind::Regression:
      return std::numeric_limits<double>::quiet_NaN();
    case TaskKind::SignedScalar: {
      int hits = 0;
      for (int i = 0; i < n; ++i) {
        hits += ((F(0, i) >= 0.0) == (Y(0, i) >= 0.0)) ? 1 : 0;
      }
      return static_cast<double>(hits) / n;
    }
    case TaskKind::OneHot: {
      int hits = 0;
      for (int i = 0; i < n; ++i) {
        int pf, py;
        F.col(i).maxCoeff(&pf);
        Y.col(i).maxCoeff(&py);
        hits += (pf == py) ? 1 : 0;
      }
      return static_cast<double>(hits) / n;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TrainRecord train(NetworkState& state, const Dataset& train_data, const Dataset* test_data,
                  const TrainOptions& opts) {
  if (!(opts.lr > 0.0)) throw std::invalid_argument("train: lr must be positive");
  const NetworkConfig& cfg = state.cfg;
  if (train_data.dim() != cfg.input_dim ||
      train_data.targets.cols() != cfg.output_dim) {
    throw std::invalid_argument("train: dataset does not match the network shape");
  }

  const Eigen::MatrixXd Xtr = train_data.inputs.transpose();
  const Eigen::MatrixXd Ytr = train_data.targets.transpose();
  const int n_train = static_cast<int>(Xtr.cols());

  Eigen::MatrixXd Xte, Yte;
  if (test_data) {
    Xte = test_data->inputs.transpose();
    Yte = test_data->targets.transpose();
  }

  Eigen::MatrixXd F0tr, F0te;
  if (opts.centered) {
    F0tr = forward(state, Xtr, nullptr, false, true);
    if (test_data) F0te = forward(state, Xte, nullptr, false, true);
  }

  TrainRecord rec;
  const auto record_point = [&](int epoch, double mse, double acc) {
    rec.epochs.push_back(epoch);
    rec.train_mse.push_back(mse);
    rec.train_acc.push_back(acc);
    if (test_data) {
      Eigen::MatrixXd Fte = forward(state, Xte, nullptr, false);
      if (opts.centered) Fte -= F0te;
      rec.test_mse.push_back((Fte - Yte).squaredNorm() / Xte.cols());
      rec.test_acc.push_back(accuracy_of(train_data.kind, Fte, Yte));
    } else {
      rec.test_mse.push_back(std::numeric_limits<double>::quiet_NaN());
      rec.test_acc.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  };

  ForwardCache cache;
  for (int epoch = 0;; ++epoch) {
    Eigen::MatrixXd F = forward(state, Xtr, &cache, false);
    if (opts.centered) F -= F0tr;
    const Eigen::MatrixXd R = F - Ytr;
    const double mse = R.squaredNorm() / n_train;
    const double acc = accuracy_of(train_data.kind, F, Ytr);

    const bool dense = epoch <= opts.record_dense_until;
    const bool on_interval = dense || (epoch % opts.record_interval == 0);
    std::string stop;
    if (!std::isfinite(mse)) {
      stop = "non_finite_loss";
    } else if (mse < opts.stop_mse) {
      stop = "train_mse_below_threshold";
    } else if (epoch >= opts.max_epochs) {
      stop = "epoch_cap";
    }
    if (on_interval || !stop.empty()) {
      if (rec.epochs.empty() || rec.epochs.back() != epoch) record_point(epoch, mse, acc);
    }
    if (!stop.empty()) {
      rec.stop_reason = stop;
      rec.epochs_run = epoch;
      break;
    }

    // GD descends the conventional (1/2N)|F - Y|^2 objective; the recorded
    // MSE metric above carries no 1/2.
    const Eigen::MatrixXd dLdF = (1.0 / n_train) * R;
    const Gradients g = grad(state, cache, dLdF);
    for (size_t l = 0; l < state.omega.size(); ++l) {
      state.omega[l].noalias() -= opts.lr * g.d_omega[l];
      state.beta[l].noalias() -= opts.lr * g.d_beta[l];
    }
  }
  return rec;
}

void TrainRecord::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("TrainRecord: cannot open " + path);
  out << "epoch,train_mse,test_mse,train_acc,test_acc\n";
  char buf[160];
  for (size_t i = 0; i < epochs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", epochs[i], train_mse[i],
                  test_mse[i], train_acc[i], test_acc[i]);
    out << buf;
  }
}

}  // namespace ntkforge
