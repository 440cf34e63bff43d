#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ntkforge/activation.hpp"

namespace ntkforge {

// NTK of a 1HL network (sigma_w=1, sigma_b=0) with the mimic ansatz as
// activation: tau(c) + c * tau_{phi'}(c).
double ansatz_kernel(const AnsatzParams& p, double c);

struct NelderMeadConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double tol = 1e-10;  // simplex value spread
  int max_iters = 5000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iters = 0;
  std::vector<double> trace;  // best value per iteration
};

// Downhill simplex. A probe point where the objective is non-finite is
// treated as +inf (rejected move). The returned point is never worse than
// the start point.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadConfig& cfg = {},
                             const Eigen::VectorXd& initial_step = Eigen::VectorXd());

enum class KernelPath { Analytic, Empirical };

struct KernelObjective {
  std::function<double(double)> target;  // evaluable on c_grid
  std::vector<double> c_grid;            // default: 41 equispaced on [-1,1]
  KernelPath path = KernelPath::Analytic;
  int width = 4096;      // Empirical path only
  int n_seeds = 20;      // Empirical path only
  std::uint64_t seed = 0;
};

struct MimicFit {
  AnsatzParams params;
  double residual = 0.0;  // final sum of squared kernel mismatches
  NelderMeadResult opt;
};

// Optimize the ansatz so the 1HL NTK matches the target kernel on the grid
// (sum of squared errors). The Analytic path evaluates ansatz_kernel by
// quadrature; the Empirical path averages empirical NTKs of finite 1HL nets.
MimicFit fit_mimic(const KernelObjective& objective, const AnsatzParams& x0,
                   const NelderMeadConfig& cfg = {});

// Sum of squared errors of the ansatz NTK against the target on the grid.
double ansatz_mismatch(const AnsatzParams& p, const std::function<double(double)>& target,
                       const std::vector<double>& c_grid);

// Empirical ansatz NTK curve on the toy circle, averaged over n_seeds
// finite-width 1HL nets (used by the Empirical objective path and tests).
std::vector<double> ansatz_empirical_curve(const AnsatzParams& p, const std::vector<double>& c_grid,
                                           int width, int n_seeds, std::uint64_t seed);

// {"alpha": .., ..., "eta": .., "residual": .., "grid": [...]}
std::string ansatz_to_json(const AnsatzParams& p, double residual,
                           const std::vector<double>& grid);
AnsatzParams ansatz_from_json(const std::string& text);

}  // namespace ntkforge
