#include "ntkforge/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "ntkforge/kernel.hpp"
#include "ntkforge/net.hpp"

namespace ntkforge {

double ansatz_kernel(const AnsatzParams& p, double c) {
  return ansatz_tau(p, c, 1.0, false) + c * ansatz_tau(p, c, 1.0, true);
}

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadConfig& cfg,
                             const Eigen::VectorXd& initial_step) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw std::invalid_argument("nelder_mead: empty start point");

  const auto safe_eval = [&](const Eigen::VectorXd& x) {
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  const double f0 = safe_eval(x0);
  if (!std::isfinite(f0)) {
    throw std::invalid_argument("nelder_mead: objective must be finite at the start point");
  }

  std::vector<Eigen::VectorXd> x(n + 1, x0);
  std::vector<double> fx(n + 1);
  fx[0] = f0;
  for (int i = 0; i < n; ++i) {
    const double step =
        initial_step.size() == n ? initial_step[i] : std::max(0.1, 0.1 * std::abs(x0[i]));
    x[i + 1][i] += step;
    fx[i + 1] = safe_eval(x[i + 1]);
  }

  NelderMeadResult best{x0, f0, 0, {}};
  std::vector<int> order(n + 1);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    for (int i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
    {
      std::vector<Eigen::VectorXd> xs(n + 1);
      std::vector<double> fs(n + 1);
      for (int i = 0; i <= n; ++i) {
        xs[i] = x[order[i]];
        fs[i] = fx[order[i]];
      }
      x.swap(xs);
      fx.swap(fs);
    }
    if (fx[0] < best.value) {
      best.value = fx[0];
      best.x = x[0];
    }
    best.trace.push_back(best.value);
    const double spread = std::isfinite(fx[n]) ? fx[n] - fx[0]
                                               : std::numeric_limits<double>::infinity();
    if (spread < cfg.tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += x[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + cfg.reflection * (centroid - x[n]);
    const double fr = safe_eval(xr);
    if (fr < fx[0]) {
      const Eigen::VectorXd xe = centroid + cfg.expansion * (xr - centroid);
      const double fe = safe_eval(xe);
      if (fe < fr) {
        x[n] = xe;
        fx[n] = fe;
      } else {
        x[n] = xr;
        fx[n] = fr;
      }
    } else if (fr < fx[n - 1]) {
      x[n] = xr;
      fx[n] = fr;
    } else {
      const bool outside = fr < fx[n];
      const Eigen::VectorXd xc =
          outside ? (centroid + cfg.contraction * (xr - centroid)).eval()
                  : (centroid + cfg.contraction * (x[n] - centroid)).eval();
      const double fc = safe_eval(xc);
      if (fc < (outside ? fr : fx[n])) {
        x[n] = xc;
        fx[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          x[i] = x[0] + cfg.shrink * (x[i] - x[0]);
          fx[i] = safe_eval(x[i]);
        }
      }
    }
  }

  for (int i = 0; i <= n; ++i) {
    if (fx[i] < best.value) {
      best.value = fx[i];
      best.x = x[i];
    }
  }
  best.iters = iter;
  return best;
}

double ansatz_mismatch(const AnsatzParams& p, const std::function<double(double)>& target,
                       const std::vector<double>& c_grid) {
  double acc = 0.0;
  for (double c : c_grid) {
    const double d = target(c) - ansatz_kernel(p, c);
    acc += d * d;
  }
  return acc;
}

std::vector<double> ansatz_empirical_curve(const AnsatzParams& p, const std::vector<double>& c_grid,
                                           int width, int n_seeds, std::uint64_t seed) {
  // Toy circle inputs (sqrt(2) cos t, sqrt(2) sin t) with the first point as
  // one kernel argument, so c = cos t.
  const int m = static_cast<int>(c_grid.size());
  Eigen::MatrixXd base(2, 1);
  base << std::sqrt(2.0), 0.0;
  Eigen::MatrixXd points(2, m);
  for (int i = 0; i < m; ++i) {
    const double t = std::acos(std::clamp(c_grid[i], -1.0, 1.0));
    points(0, i) = std::sqrt(2.0) * std::cos(t);
    points(1, i) = std::sqrt(2.0) * std::sin(t);
  }

  std::vector<double> curve(m, 0.0);
  NetworkConfig cfg;
  cfg.input_dim = 2;
  cfg.output_dim = 1;
  cfg.hidden_widths = {width};
  cfg.scales = {{1.0, 0.0}, {1.0, 0.0}};
  cfg.activation = ActivationSpec::ansatz(p);
  for (int s = 0; s < n_seeds; ++s) {
    cfg.seed = seed + static_cast<std::uint64_t>(s);
    const NetworkState state = init(cfg);
    const Eigen::MatrixXd K = empirical_ntk(state, base, points);
    for (int i = 0; i < m; ++i) curve[i] += K(0, i);
  }
  for (double& v : curve) v /= n_seeds;
  return curve;
}

MimicFit fit_mimic(const KernelObjective& objective, const AnsatzParams& x0,
                   const NelderMeadConfig& cfg) {
  if (!objective.target) throw std::invalid_argument("fit_mimic: target kernel required");
  std::vector<double> grid = objective.c_grid;
  if (grid.empty()) {
    grid.resize(41);
    for (int i = 0; i < 41; ++i) grid[i] = -1.0 + 2.0 * i / 40.0;
  }
  std::vector<double> target_vals(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) target_vals[i] = objective.target(grid[i]);

  const auto unpack = [](const Eigen::VectorXd& v) {
    AnsatzParams p;
    p.alpha = v[0];
    p.beta = v[1];
    p.gamma = v[2];
    p.delta = v[3];
    p.epsilon = v[4];
    p.zeta = v[5];
    p.eta = v[6];
    return p;
  };

  std::function<double(const Eigen::VectorXd&)> obj;
  if (objective.path == KernelPath::Analytic) {
    obj = [&](const Eigen::VectorXd& v) {
      const AnsatzParams p = unpack(v);
      double acc = 0.0;
      for (size_t i = 0; i < grid.size(); ++i) {
        const double d = target_vals[i] - ansatz_kernel(p, grid[i]);
        acc += d * d;
      }
      return acc;
    };
  } else {
    obj = [&](const Eigen::VectorXd& v) {
      const AnsatzParams p = unpack(v);
      const std::vector<double> curve =
          ansatz_empirical_curve(p, grid, objective.width, objective.n_seeds, objective.seed);
      double acc = 0.0;
      for (size_t i = 0; i < grid.size(); ++i) {
        const double d = target_vals[i] - curve[i];
        acc += d * d;
      }
      return acc;
    };
  }

  Eigen::VectorXd v0(7);
  v0 << x0.alpha, x0.beta, x0.gamma, x0.delta, x0.epsilon, x0.zeta, x0.eta;
  const NelderMeadResult r = nelder_mead(obj, v0, cfg);

  MimicFit fit;
  fit.params = unpack(r.x);
  fit.residual = r.value;
  fit.opt = r;
  return fit;
}

std::string ansatz_to_json(const AnsatzParams& p, double residual,
                           const std::vector<double>& grid) {
  nlohmann::json j;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["gamma"] = p.gamma;
  j["delta"] = p.delta;
  j["epsilon"] = p.epsilon;
  j["zeta"] = p.zeta;
  j["eta"] = p.eta;
  j["residual"] = residual;
  j["grid"] = grid;
  return j.dump(2);
}

AnsatzParams ansatz_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  AnsatzParams p;
  p.alpha = j.at("alpha");
  p.beta = j.at("beta");
  p.gamma = j.at("gamma");
  p.delta = j.at("delta");
  p.epsilon = j.at("epsilon");
  p.zeta = j.at("zeta");
  p.eta = j.at("eta");
  return p;
}

}  // namespace ntkforge
