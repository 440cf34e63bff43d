#include <doctest.h>

#include <cmath>

#include "ntkforge/ansatz.hpp"
#include "ntkforge/kernel.hpp"
#include "oracles.hpp"

using namespace ntkforge;

namespace {

const AnsatzParams kReference{3.8001, 1.0600, -0.0794, 11.8106, 0.9341, 0.0968, 0.9010};

}

TEST_CASE("ansatz kernel: linear reduction gives 2c") {
  AnsatzParams p;
  p.zeta = 1.0;
  for (double c : {-1.0, -0.3, 0.0, 0.4, 1.0}) {
    CHECK(ansatz_kernel(p, c) == doctest::Approx(2.0 * c).epsilon(1e-9));
  }
}

TEST_CASE("ansatz kernel: pure cosine at a phase shift reproduces the sine NTK") {
  // cos(z + pi/2) = -sin(z); the kernel is sign-invariant
  AnsatzParams p;
  p.gamma = 1.0;
  p.delta = 1.0;
  p.epsilon = M_PI / 2.0;
  for (double c : {-0.8, 0.0, 0.5, 1.0}) {
    CHECK(ansatz_kernel(p, c) ==
          doctest::Approx(ntk_closed_form(NamedActivation::Sin, 1.0, c)).epsilon(1e-8));
  }
}

TEST_CASE("ansatz kernel: constant activation gives a constant kernel") {
  AnsatzParams p;
  p.eta = 1.0;
  CHECK(ansatz_kernel(p, 0.7) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(ansatz_kernel(p, -0.7) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("ansatz tau agrees with a lattice Monte Carlo estimate") {
  for (double c : {-1.0, 0.0, 0.5, 1.0}) {
    const double quad = ansatz_tau(kReference, c, 1.0, false);
    const double mc = oracles::bivariate_mc([&](double z) { return ansatz_value(kReference, z); },
                                            [&](double z) { return ansatz_value(kReference, z); },
                                            c, 1000000, 42);
    CHECK(std::abs(quad - mc) < 1e-3);

    const double dquad = ansatz_tau(kReference, c, 1.0, true);
    const double dmc = oracles::bivariate_mc([&](double z) { return ansatz_deriv(kReference, z); },
                                             [&](double z) { return ansatz_deriv(kReference, z); },
                                             c, 1000000, 43);
    CHECK(std::abs(dquad - dmc) < 1e-3);
  }
}

TEST_CASE("ansatz tau agrees with the 2D kink-split quadrature") {
  const std::vector<double> breaks = {kReference.beta};
  for (double c : {-0.9, -0.2, 0.3, 0.8, 1.0}) {
    const double quad2d = tau_quadrature_split(
        [&](double z) { return ansatz_value(kReference, z); }, breaks, c, 1.0, {9.0, 14, 24});
    CHECK(ansatz_tau(kReference, c, 1.0, false) == doctest::Approx(quad2d).epsilon(1e-8));
  }
}

TEST_CASE("nelder_mead: quadratic bowl") {
  const auto obj = [](const Eigen::VectorXd& x) {
    return (x.array() - 3.0).square().sum();
  };
  NelderMeadConfig cfg;
  cfg.tol = 1e-16;
  const NelderMeadResult r = nelder_mead(obj, Eigen::VectorXd::Zero(4), cfg);
  for (int i = 0; i < 4; ++i) CHECK(r.x[i] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(r.value < 1e-10);
}

TEST_CASE("nelder_mead: Rosenbrock from the classic start") {
  const auto rosen = [](const Eigen::VectorXd& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  NelderMeadConfig cfg;
  cfg.max_iters = 500;
  cfg.tol = 1e-14;
  const NelderMeadResult r = nelder_mead(rosen, x0, cfg);
  CHECK(r.value < 1e-8);
  CHECK(r.iters <= 500);
}

TEST_CASE("nelder_mead never returns a point worse than the start") {
  // objective with a non-finite cliff; probes there are treated as rejected
  const auto obj = [](const Eigen::VectorXd& x) {
    if (x[0] > 0.5) return std::numeric_limits<double>::quiet_NaN();
    return x.squaredNorm();
  };
  Eigen::VectorXd x0(3);
  x0 << 0.4, 1.0, -2.0;
  const NelderMeadResult r = nelder_mead(obj, x0);
  CHECK(r.value <= obj(x0));
  CHECK(std::isfinite(r.value));
  CHECK_THROWS(nelder_mead(obj, Eigen::VectorXd::Constant(2, 1.0)));  // non-finite start
}

TEST_CASE("nelder_mead trace is the running best") {
  const auto obj = [](const Eigen::VectorXd& x) { return x.squaredNorm(); };
  const NelderMeadResult r = nelder_mead(obj, Eigen::VectorXd::Constant(2, 2.0));
  for (size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] + 1e-15);
}

TEST_CASE("fit_mimic recovers a reachable target") {
  // target: the sine NTK, reachable at gamma-only parameters
  KernelObjective obj;
  obj.target = [](double c) { return ntk_closed_form(NamedActivation::Sin, 1.0, c); };
  AnsatzParams x0;
  x0.gamma = 0.9;
  x0.delta = 1.1;
  x0.epsilon = M_PI / 2.0 + 0.1;
  x0.zeta = 0.05;
  NelderMeadConfig cfg;
  cfg.max_iters = 3000;
  const MimicFit fit = fit_mimic(obj, x0, cfg);
  CHECK(fit.residual < 1e-6);
}

TEST_CASE("fit_mimic: constant target is immediate at the eta-only optimum") {
  KernelObjective obj;
  obj.target = [](double) { return 1.0; };
  AnsatzParams x0;
  x0.eta = 1.0;
  const MimicFit fit = fit_mimic(obj, x0);
  CHECK(fit.residual < 1e-9);
}

TEST_CASE("kernel objective does not increase from the reference parameters") {
  std::vector<LayerScales> scales(5, LayerScales{std::sqrt(2.0), 0.1});
  scales[4] = {1.0, 0.0};
  std::vector<double> grid(41);
  for (int i = 0; i < 41; ++i) grid[i] = -1.0 + 2.0 * i / 40.0;
  std::vector<double> nngp, ntk;
  deep_kernels_grid(ActivationSpec::named(NamedActivation::Relu), scales, 4, grid, nngp, ntk);

  KernelObjective obj;
  obj.c_grid = grid;
  std::vector<double> target = ntk;
  obj.target = [&, target](double c) {
    for (size_t i = 0; i < grid.size(); ++i) {
      if (std::abs(grid[i] - c) < 1e-12) return target[i];
    }
    return 0.0;
  };
  const double start = ansatz_mismatch(kReference, obj.target, grid);
  NelderMeadConfig cfg;
  cfg.max_iters = 60;
  const MimicFit fit = fit_mimic(obj, kReference, cfg);
  CHECK(fit.residual <= start + 1e-12);
}

TEST_CASE("reference ansatz kernel sits within 3% of the deep relu NTK at c=1") {
  std::vector<LayerScales> scales(5, LayerScales{std::sqrt(2.0), 0.1});
  scales[4] = {1.0, 0.0};
  const DeepKernelValues target = deep_kernels(ActivationSpec::named(NamedActivation::Relu),
                                               scales, 4, 1.0);
  const double got = ansatz_kernel(kReference, 1.0);
  CHECK(std::abs(got - target.ntk) / target.ntk < 0.03);
}

TEST_CASE("ansatz JSON round trip") {
  const std::string j = ansatz_to_json(kReference, 0.125, {0.0, 1.0});
  const AnsatzParams back = ansatz_from_json(j);
  CHECK(back.alpha == doctest::Approx(kReference.alpha));
  CHECK(back.delta == doctest::Approx(kReference.delta));
  CHECK(back.eta == doctest::Approx(kReference.eta));
  CHECK(j.find("residual") != std::string::npos);
}
