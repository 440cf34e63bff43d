#include "ntkforge/synthesis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace ntkforge {

std::string to_string(KernelTarget t) { return t == KernelTarget::NTK ? "ntk" : "nngp"; }

SignPolicy SignPolicy::explicit_signs(std::vector<int> s) {
  for (int v : s) {
    if (v != 1 && v != -1) throw std::invalid_argument("SignPolicy: entries must be +1 or -1");
  }
  return {Kind::Explicit, std::move(s)};
}

int SignPolicy::sign(int k) const {
  switch (kind) {
    case Kind::AllPositive: return 1;
    case Kind::FlipH2H3: return (k == 2 || k == 3) ? -1 : 1;
    case Kind::Explicit:
      if (k >= static_cast<int>(signs.size())) {
        throw std::invalid_argument("SignPolicy: explicit sign list shorter than series");
      }
      return signs[k];
  }
  return 1;
}

hermite::HermiteSeries synthesize_activation(std::span<const double> kernel_series,
                                             KernelTarget target, const SignPolicy& signs) {
  const PsdCheck psd = check_psd(kernel_series);
  if (!psd.ok) {
    throw std::invalid_argument("synthesize_activation: kernel series is not PSD at index " +
                                std::to_string(psd.violating_index));
  }
  std::vector<double> b(kernel_series.size());
  for (size_t k = 0; k < b.size(); ++k) {
    const double a = std::max(0.0, kernel_series[k]);  // PSD check allows -1e-12 noise
    const double mag =
        target == KernelTarget::NTK ? std::sqrt(a / (1.0 + static_cast<double>(k))) : std::sqrt(a);
    b[k] = signs.sign(static_cast<int>(k)) * mag;
  }
  return hermite::HermiteSeries{std::move(b)};
}

std::vector<double> FitConfig::default_grid(int n) {
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = -1.0 + 2.0 * i / (n - 1);
  return g;
}

FitResult fit_polynomial(const std::function<double(double)>& kernel, const FitConfig& cfg) {
  if (cfg.degree < 0) throw std::invalid_argument("fit_polynomial: degree must be >= 0");
  std::vector<double> grid = cfg.c_grid.empty() ? FitConfig::default_grid() : cfg.c_grid;
  const int n = static_cast<int>(grid.size());
  const int m = cfg.degree + 1;
  if (n < 1) throw std::invalid_argument("fit_polynomial: empty grid");

  const double f1 = cfg.endpoint_weight_fraction;
  if (f1 < 0.0 || f1 >= 1.0) {
    throw std::invalid_argument("fit_polynomial: endpoint_weight_fraction must be in [0,1)");
  }
  int one_idx = -1;
  for (int i = 0; i < n; ++i) {
    if (std::abs(grid[i] - 1.0) < 1e-14) one_idx = i;
  }
  if (f1 > 0.0 && one_idx < 0) {
    throw std::invalid_argument("fit_polynomial: grid must contain c=1 when the endpoint carries weight");
  }

  Eigen::VectorXd w(n);
  if (f1 > 0.0 && n > 1) {
    const double rest = (1.0 - f1) / (n - 1);
    w.setConstant(rest);
    w[one_idx] = f1;
  } else {
    w.setConstant(1.0 / n);
  }

  Eigen::MatrixXd design(n, m);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    const double sw = std::sqrt(w[i]);
    double pc = 1.0;
    for (int j = 0; j < m; ++j) {
      design(i, j) = sw * pc;
      pc *= grid[i];
    }
    rhs[i] = sw * kernel(grid[i]);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  FitResult out;
  out.rank = static_cast<int>(qr.rank());
  out.rank_deficient = out.rank < m;
  const Eigen::VectorXd coeffs = qr.solve(rhs);
  out.coeffs.assign(coeffs.data(), coeffs.data() + m);

  double sup = 0.0;
  for (int i = 0; i < n; ++i) {
    sup = std::max(sup, std::abs(eval_power_series(out.coeffs, grid[i]) - kernel(grid[i])));
  }
  out.residual = sup;
  return out;
}

std::vector<double> clip_to_psd(std::span<const double> series, double tol) {
  std::vector<double> out(series.begin(), series.end());
  for (size_t k = 0; k < out.size(); ++k) {
    if (out[k] < 0.0) {
      if (out[k] < -tol) {
        throw std::invalid_argument(
            "clip_to_psd: coefficient " + std::to_string(k) + " = " + std::to_string(out[k]) +
            " is below -tol; the target is outside the PSD cone at this degree");
      }
      out[k] = 0.0;
    }
  }
  return out;
}

hermite::HermiteSeries transform_activation(const hermite::HermiteSeries& phi,
                                            const Transform& t) {
  switch (t.kind) {
    case Transform::Kind::Derivative: return hermite::series_derivative(phi);
    case Transform::Kind::Scale: {
      hermite::HermiteSeries out = phi;
      for (double& b : out.coeffs) b *= t.alpha;
      return out;
    }
    case Transform::Kind::Reflect: {
      // h_k(-z) = (-1)^k h_k(z): odd coefficients flip sign.
      hermite::HermiteSeries out = phi;
      for (size_t k = 1; k < out.coeffs.size(); k += 2) out.coeffs[k] = -out.coeffs[k];
      return out;
    }
  }
  throw std::logic_error("transform_activation: unreachable");
}

std::string synthesized_to_json(const hermite::HermiteSeries& phi, KernelTarget target) {
  nlohmann::json j;
  j["hermite_coeffs"] = phi.coeffs;
  j["target"] = to_string(target);
  nlohmann::json signs = nlohmann::json::array();
  for (double b : phi.coeffs) signs.push_back(b < 0.0 ? -1 : 1);
  j["signs"] = signs;
  return j.dump(2);
}

}  // namespace ntkforge
