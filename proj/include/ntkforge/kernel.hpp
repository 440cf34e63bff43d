#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ntkforge/activation.hpp"
#include "ntkforge/hermite.hpp"

namespace ntkforge {

// Initialization scales of one weight layer.
struct LayerScales {
  double sigma_w = 1.0;
  double sigma_b = 0.0;
};

// A dot-product kernel K(c), c in [-1,1], represented as a power series
// sum_k a_k c^k with a_k >= 0 (the PSD condition), a closed form, or both.
struct DotProductKernel {
  std::optional<std::vector<double>> series;
  std::function<double(double)> closed_form;  // may be empty
  std::string source;                          // provenance tag for JSON meta

  double eval(double c) const;  // closed form when present, else series
  // Enforces the type invariants: PSD series, finite sum, and (when both
  // representations are present) agreement within 1e-8 on a 41-point grid.
  void validate() const;

  std::string to_json() const;
  static DotProductKernel from_json(const std::string& text);
};

struct PsdCheck {
  bool ok = true;
  int violating_index = -1;  // first index with a_k < -tol (or non-finite)
};

// Theorem guard for kernel synthesis: every coefficient >= -tol and the sum
// finite.
PsdCheck check_psd(std::span<const double> series, double tol = 1e-12);

double eval_power_series(std::span<const double> series, double c);

// tau transform of a Hermite-series activation at unit variance:
// sum_k b_k^2 c^k.
double tau_series(const hermite::HermiteSeries& phi, double c);

// tau_phi(c; sigma^2) = E[phi(z1) phi(z2)] over centered bivariate normals
// with variance sigma^2 and correlation c, by QxQ Gauss-Hermite quadrature
// on the substitution z1 = sigma*u, z2 = sigma*(c*u + sqrt(1-c^2)*v).
double tau_quadrature(const std::function<double(double)>& phi, double c, double sigma2,
                      int q = 100);

// Same expectation by panel Gauss-Legendre against the Gaussian density,
// splitting panels at the images of the activation's breakpoints. Spectrally
// accurate for piecewise-smooth integrands (relu, step, the mimic ansatz),
// where plain Gauss-Hermite stalls on the kink.
struct PanelQuadOpts {
  double range = 9.0;        // integrate u,v over [-range, range]
  int panels = 12;           // uniform base panels per axis
  int nodes_per_panel = 20;  // Gauss-Legendre nodes per panel
};
double tau_quadrature_split(const std::function<double(double)>& phi,
                            std::span<const double> breakpoints, double c, double sigma2,
                            const PanelQuadOpts& opts = {});

// Closed-form tau transforms at unit variance:
//   sin:  e^{-a^2} sinh(a^2 c)
//   cos:  e^{-a^2} cosh(a^2 c)
//   relu: (1/2pi) [ (pi - acos(c)) c + sqrt(1-c^2) ]
//   exp:  e^{a^2 (c+1)}
// erf has no entry here; it is handled by Hermite decomposition.
double tau_closed_form(NamedActivation name, double a, double c);

// tau of phi and of phi' for an arbitrary activation spec at variance
// sigma^2. Dispatch: Hermite series and erf go through decomposition of
// z -> phi(sigma z); sin/cos/exp/relu use closed forms; the ansatz uses the
// split quadrature below (see ansatz_tau); custom functions use plain
// Gauss-Hermite quadrature.
double tau_of(const ActivationSpec& phi, double c, double sigma2);
double tau_deriv_of(const ActivationSpec& phi, double c, double sigma2);

// E[phi(z1) phi(z2)] for the mimic ansatz by 1D quadrature: the inner
// conditional expectation E[phi(z2) | z1] is analytic for every ansatz term
// (relu / cosine / affine), leaving a single piecewise-smooth integral
// over z1. deriv=true integrates phi' instead.
double ansatz_tau(const AnsatzParams& p, double c, double sigma2, bool deriv = false);

// One-hidden-layer kernels with scales (sigma_w, sigma_b) at both layers:
//   NNGP(c) = sw^2 tau_phi((sw^2 c + sb^2)/(sw^2+sb^2); sw^2+sb^2) + sb^2
//   NTK(c)  = NNGP(c) + (sw^2 c + sb^2) tau_{phi'}(same args)
double nngp_1hl(const ActivationSpec& phi, LayerScales scales, double c);
double ntk_1hl(const ActivationSpec& phi, LayerScales scales, double c);

// Closed-form one-hidden-layer NTKs (sigma_w=1, sigma_b=0):
//   exp:  e^{a^2(1+c)} (1 + a^2 c)
//   sin:  e^{-a^2} (sinh(a^2 c) + a^2 c cosh(a^2 c))
//   cos:  e^{-a^2} (cosh(a^2 c) + a^2 c sinh(a^2 c))
//   relu: (1/2pi) (sqrt(1-c^2) + 2c (pi - acos(c)))
double ntk_closed_form(NamedActivation name, double a, double c);

// Exact 1HL kernel power series of a Hermite-series activation with
// sigma_w=1, sigma_b=0: a_k = b_k^2 (NNGP) or b_k^2 (1+k) (NTK).
std::vector<double> nngp_series_1hl(const hermite::HermiteSeries& phi);
std::vector<double> ntk_series_1hl(const hermite::HermiteSeries& phi);

struct DeepKernelValues {
  double nngp = 0.0;
  double ntk = 0.0;
};

// Layerwise kernel recursion for a depth-L network (L hidden layers, L+1
// weight layers; scales[0..L], scales[L] being the readout):
//   K_0(c)     = sw_0^2 c + sb_0^2
//   K_{l+1}(c) = sw_{l+1}^2 tau_phi(K_l(c)/K_l(1); K_l(1)) + sb_{l+1}^2
//   Th_0       = K_0
//   Th_{l+1}(c)= K_{l+1}(c) + Th_l(c) sw_{l+1}^2 tau_{phi'}(K_l(c)/K_l(1); K_l(1))
// Returns (K_L, Th_L). Throws if any K_l(1) <= 0 (degenerate scales).
DeepKernelValues deep_kernels(const ActivationSpec& phi, std::span<const LayerScales> scales,
                              int depth, double c);

// Grid evaluation sharing the per-layer decompositions across c values.
void deep_kernels_grid(const ActivationSpec& phi, std::span<const LayerScales> scales, int depth,
                       std::span<const double> cs, std::vector<double>& nngp,
                       std::vector<double>& ntk);

}  // namespace ntkforge
