#include <doctest.h>

#include <cmath>
#include <random>

#include "ntkforge/net.hpp"
#include "ntkforge/synthesis.hpp"

using namespace ntkforge;
using hermite::HermiteSeries;

namespace {

NetworkConfig small_config(std::uint64_t seed, ActivationSpec act, std::vector<int> widths,
                           int in_dim = 3, int out_dim = 2) {
  NetworkConfig cfg;
  cfg.input_dim = in_dim;
  cfg.output_dim = out_dim;
  cfg.hidden_widths = std::move(widths);
  cfg.scales.assign(cfg.hidden_widths.size() + 1, LayerScales{1.2, 0.3});
  cfg.activation = std::move(act);
  cfg.seed = seed;
  return cfg;
}

Eigen::MatrixXd circle_points(const std::vector<double>& cs) {
  Eigen::MatrixXd pts(2, cs.size());
  for (size_t i = 0; i < cs.size(); ++i) {
    const double t = std::acos(std::clamp(cs[i], -1.0, 1.0));
    pts(0, i) = std::sqrt(2.0) * std::cos(t);
    pts(1, i) = std::sqrt(2.0) * std::sin(t);
  }
  return pts;
}

}  // namespace

TEST_CASE("init is deterministic and stores the snapshot") {
  const NetworkConfig cfg = small_config(42, ActivationSpec::named(NamedActivation::Relu), {4});
  const NetworkState a = init(cfg);
  const NetworkState b = init(cfg);
  CHECK((a.omega[0] - b.omega[0]).norm() == 0.0);
  CHECK((a.beta[1] - b.beta[1]).norm() == 0.0);
  CHECK((a.omega[0] - a.omega0[0]).norm() == 0.0);

  NetworkConfig other = cfg;
  other.seed = 43;
  CHECK((init(other).omega[0] - a.omega[0]).norm() != 0.0);
}

TEST_CASE("parameter count") {
  NetworkConfig cfg = small_config(0, ActivationSpec::named(NamedActivation::Relu), {8}, 5, 2);
  CHECK(cfg.parameter_count() == 8 * 5 + 8 + 2 * 8 + 2);
}

TEST_CASE("forward: linear network composes the scaled weight product") {
  NetworkConfig cfg = small_config(7, ActivationSpec::hermite_series(HermiteSeries{{0.0, 1.0}}),
                                   {5}, 3, 1);
  cfg.scales = {{1.0, 0.0}, {1.0, 0.0}};
  const NetworkState s = init(cfg);
  Eigen::MatrixXd x(3, 1);
  x << 0.3, -1.2, 0.7;
  const Eigen::MatrixXd y = forward(s, x);
  const Eigen::MatrixXd expected =
      (1.0 / std::sqrt(5.0 * 3.0)) * s.omega[1] * (s.omega[0] * x);
  CHECK((y - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forward: odd activation, zero bias, zero input gives zero") {
  NetworkConfig cfg = small_config(9, ActivationSpec::named(NamedActivation::Sin, 2.0), {6, 6});
  for (LayerScales& sc : cfg.scales) sc.sigma_b = 0.0;
  const NetworkState s = init(cfg);
  const Eigen::MatrixXd y = forward(s, Eigen::MatrixXd::Zero(3, 2));
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward rejects dimension mismatch and reports non-finite layers") {
  const NetworkConfig cfg = small_config(1, ActivationSpec::named(NamedActivation::Relu), {4});
  const NetworkState s = init(cfg);
  CHECK_THROWS(forward(s, Eigen::MatrixXd::Zero(5, 1)));

  // an exploding custom activation reports the layer index
  NetworkConfig bad = small_config(
      1, ActivationSpec::custom([](double z) { return std::exp(z * z * z * z) * 1e308; },
                                [](double) { return 0.0; }),
      {4, 4});
  NetworkState sb = init(bad);
  sb.omega[0] *= 50.0;
  try {
    forward(sb, Eigen::MatrixXd::Constant(3, 1, 10.0));
    FAIL("expected non-finite report");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("layer") != std::string::npos);
  }
}

TEST_CASE("gradients match central finite differences over random configurations") {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::vector<ActivationSpec> acts = {
      ActivationSpec::named(NamedActivation::Relu),
      ActivationSpec::named(NamedActivation::Sin, 1.5),
      ActivationSpec::named(NamedActivation::Erf),
      ActivationSpec::hermite_series(HermiteSeries{{0.1, 0.8, -0.3, 0.2}}),
      ActivationSpec::ansatz(AnsatzParams{1.0, 0.2, 0.5, 3.0, 0.3, 0.4, 0.1}),
  };
  for (int trial = 0; trial < 20; ++trial) {
    NetworkConfig cfg;
    cfg.input_dim = 2 + static_cast<int>(rng() % 3);
    cfg.output_dim = 1 + static_cast<int>(rng() % 2);
    const int depth = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < depth; ++l) cfg.hidden_widths.push_back(2 + static_cast<int>(rng() % 4));
    cfg.scales.assign(depth + 1, LayerScales{0.8 + 0.4 * (trial % 3), 0.1 * (trial % 2)});
    cfg.activation = acts[trial % acts.size()];
    cfg.seed = 1000 + trial;
    NetworkState s = init(cfg);

    const int n = 3;
    Eigen::MatrixXd X(cfg.input_dim, n);
    Eigen::MatrixXd Y(cfg.output_dim, n);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
    for (int i = 0; i < Y.size(); ++i) Y.data()[i] = gauss(rng);

    const auto loss = [&]() {
      return (forward(s, X, nullptr, false) - Y).squaredNorm() / n;
    };
    ForwardCache cache;
    const Eigen::MatrixXd F = forward(s, X, &cache, false);
    const Gradients g = grad(s, cache, (2.0 / n) * (F - Y));

    double worst = 0.0;
    const double h = 1e-4;
    for (size_t l = 0; l < s.omega.size(); ++l) {
      for (int idx = 0; idx < s.omega[l].size(); idx += 1 + idx / 3) {
        const double save = s.omega[l].data()[idx];
        s.omega[l].data()[idx] = save + h;
        const double up = loss();
        s.omega[l].data()[idx] = save - h;
        const double dn = loss();
        s.omega[l].data()[idx] = save;
        const double fd = (up - dn) / (2 * h);
        const double an = g.d_omega[l].data()[idx];
        worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd)));
      }
      for (int idx = 0; idx < s.beta[l].size(); ++idx) {
        const double save = s.beta[l][idx];
        s.beta[l][idx] = save + h;
        const double up = loss();
        s.beta[l][idx] = save - h;
        const double dn = loss();
        s.beta[l][idx] = save;
        const double fd = (up - dn) / (2 * h);
        worst = std::max(worst, std::abs(fd - g.d_beta[l][idx]) / std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("zeroed readout kills hidden weight gradients") {
  NetworkConfig cfg = small_config(4, ActivationSpec::named(NamedActivation::Erf), {5}, 3, 1);
  NetworkState s = init(cfg);
  s.omega.back().setZero();
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 4);
  ForwardCache cache;
  const Eigen::MatrixXd F = forward(s, X, &cache);
  const Gradients g = grad(s, cache, Eigen::MatrixXd::Ones(1, 4));
  CHECK(g.d_omega[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.d_omega[1].cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("linear 1HL gradient matches the hand-derived closed form") {
  NetworkConfig cfg = small_config(17, ActivationSpec::hermite_series(HermiteSeries{{0.0, 1.0}}),
                                   {4}, 2, 1);
  cfg.scales = {{1.0, 0.0}, {1.0, 0.0}};
  NetworkState s = init(cfg);
  Eigen::MatrixXd x(2, 1);
  x << 0.5, -1.0;
  ForwardCache cache;
  forward(s, x, &cache);
  const Gradients g = grad(s, cache, Eigen::MatrixXd::Ones(1, 1));
  // f = (1/sqrt(4*2)) w2 w1 x, so df/dw1 = w2^T x^T / sqrt(8) and
  // df/dw2 = (w1 x)^T / sqrt(8)
  const Eigen::MatrixXd d1 = (s.omega[1].transpose() * x.transpose()) / std::sqrt(8.0);
  const Eigen::MatrixXd d2 = (s.omega[0] * x).transpose() / std::sqrt(8.0);
  CHECK((g.d_omega[0] - d1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((g.d_omega[1] - d2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("empirical NTK: 1x1 case is a squared gradient norm") {
  const NetworkConfig cfg = small_config(3, ActivationSpec::named(NamedActivation::Erf), {6});
  const NetworkState s = init(cfg);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 1);
  const Eigen::MatrixXd K = empirical_ntk(s, x, x);
  REQUIRE(K.rows() == 1);
  CHECK(K(0, 0) >= 0.0);

  // against explicit per-parameter gradients
  ForwardCache cache;
  forward(s, x, &cache);
  Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(cfg.output_dim, 1);
  sel(0, 0) = 1.0;
  const Gradients g = grad(s, cache, sel);
  double norm2 = 0.0;
  for (const auto& m : g.d_omega) norm2 += m.squaredNorm();
  for (const auto& v : g.d_beta) norm2 += v.squaredNorm();
  CHECK(K(0, 0) == doctest::Approx(norm2).epsilon(1e-12));
}

TEST_CASE("empirical NTK is symmetric and PSD on random nets") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    NetworkConfig cfg = small_config(
        50 + trial,
        trial % 2 == 0 ? ActivationSpec::named(NamedActivation::Relu)
                       : ActivationSpec::hermite_series(HermiteSeries{{0.2, 0.9, 0.1}}),
        {8, 8}, 4, 1);
    const NetworkState s = init(cfg);
    Eigen::MatrixXd X(4, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = gauss(rng);
    const Eigen::MatrixXd K = empirical_ntk(s, X, X);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * K.trace());
  }
}

TEST_CASE("empirical NTK memory guard points at the averaging protocol") {
  NetworkConfig cfg = small_config(1, ActivationSpec::named(NamedActivation::Relu), {2048}, 2, 1);
  const NetworkState s = init(cfg);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Random(2, 64);
  try {
    empirical_ntk(s, X, X, 0, /*memory_budget_bytes=*/1024);
    FAIL("expected budget rejection");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("average") != std::string::npos);
  }
}

TEST_CASE("empirical NTK of a deep linear net concentrates on 3c") {
  // width-n 2-hidden-layer identity-activation net: analytic NTK is 3c
  const std::vector<double> cs = {-1.0, -0.5, 0.0, 0.5, 1.0};
  const Eigen::MatrixXd pts = circle_points(cs);
  Eigen::MatrixXd base(2, 1);
  base << std::sqrt(2.0), 0.0;
  double max_err = 0.0;
  for (int seed = 0; seed < 4; ++seed) {
    NetworkConfig cfg;
    cfg.input_dim = 2;
    cfg.output_dim = 1;
    cfg.hidden_widths = {512, 512};
    cfg.scales.assign(3, LayerScales{1.0, 0.0});
    cfg.activation = ActivationSpec::hermite_series(HermiteSeries{{0.0, 1.0}});
    cfg.seed = 100 + seed;
    const NetworkState s = init(cfg);
    const Eigen::MatrixXd K = empirical_ntk(s, base, pts);
    for (size_t i = 0; i < cs.size(); ++i) {
      // circle inputs satisfy |x|^2 = d, so x.x'/d = c and the limit is 3c
      max_err = std::max(max_err, std::abs(K(0, i) - 3.0 * cs[i]) / 3.0);
    }
  }
  CHECK(max_err < 0.15);
}

TEST_CASE("train: linear net on linear data decreases monotonically") {
  NetworkConfig cfg;
  cfg.input_dim = 3;
  cfg.output_dim = 1;
  cfg.hidden_widths = {16};
  cfg.scales.assign(2, LayerScales{1.0, 0.0});
  cfg.activation = ActivationSpec::hermite_series(HermiteSeries{{0.0, 1.0}});
  cfg.seed = 5;
  NetworkState s = init(cfg);

  Dataset data;
  data.kind = TaskKind::Regression;
  data.inputs = Eigen::MatrixXd::Random(32, 3) * 2.0;
  Eigen::VectorXd w(3);
  w << 1.0, -2.0, 0.5;
  data.targets = data.inputs * w;

  TrainOptions opts;
  opts.lr = 0.05;
  opts.max_epochs = 200;
  opts.stop_mse = 1e-12;
  opts.centered = false;
  const TrainRecord rec = train(s, data, nullptr, opts);
  for (size_t i = 1; i < rec.train_mse.size(); ++i) {
    CHECK(rec.train_mse[i] <= rec.train_mse[i - 1] + 1e-12);
  }
  CHECK(rec.train_mse.back() < rec.train_mse.front());
}

TEST_CASE("train: centering makes the epoch-0 prediction identically zero") {
  NetworkConfig cfg = small_config(77, ActivationSpec::named(NamedActivation::Relu), {32}, 4, 2);
  NetworkState s = init(cfg);
  Dataset data;
  data.kind = TaskKind::OneHot;
  data.inputs = Eigen::MatrixXd::Random(10, 4);
  data.targets = Eigen::MatrixXd::Zero(10, 2);
  for (int i = 0; i < 10; ++i) data.targets(i, i % 2) = 1.0;

  TrainOptions opts;
  opts.max_epochs = 0;  // metrics at initialization only
  opts.centered = true;
  const TrainRecord rec = train(s, data, &data, opts);
  // centered f_0 = 0, so the epoch-0 train MSE equals mean |y|^2 = 1
  CHECK(rec.train_mse.front() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rec.epochs_run == 0);
  CHECK(rec.stop_reason == "epoch_cap");

  NetworkState s2 = init(cfg);
  opts.centered = false;
  const TrainRecord rec2 = train(s2, data, &data, opts);
  CHECK(rec2.train_mse.front() != doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("train: non-finite loss is recorded with the epoch index, not masked") {
  // a cubic activation on a 2-hidden-layer net blows up under a huge lr
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 1;
  cfg.hidden_widths = {8, 8};
  cfg.scales.assign(3, LayerScales{2.0, 0.0});
  cfg.activation = ActivationSpec::hermite_series(HermiteSeries{{0.0, 0.0, 0.0, 1.0}});
  cfg.seed = 3;
  NetworkState s = init(cfg);

  Dataset data;
  data.kind = TaskKind::Regression;
  data.inputs = Eigen::MatrixXd::Random(16, 2) * 3.0;
  data.targets = Eigen::MatrixXd::Ones(16, 1);

  TrainOptions opts;
  opts.lr = 1e6;
  opts.max_epochs = 50;
  opts.stop_mse = 0.0;
  opts.centered = false;
  const TrainRecord rec = train(s, data, nullptr, opts);
  CHECK(rec.diverged());
  CHECK(rec.epochs_run > 0);
  CHECK(rec.epochs_run <= 50);
}

TEST_CASE("train rejects non-positive lr") {
  NetworkConfig cfg = small_config(1, ActivationSpec::named(NamedActivation::Relu), {4}, 3, 1);
  NetworkState s = init(cfg);
  Dataset data;
  data.inputs = Eigen::MatrixXd::Random(4, 3);
  data.targets = Eigen::MatrixXd::Random(4, 1);
  TrainOptions opts;
  opts.lr = 0.0;
  CHECK_THROWS(train(s, data, nullptr, opts));
}

