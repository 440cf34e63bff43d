#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ntkforge/hermite.hpp"
#include "ntkforge/kernel.hpp"

namespace ntkforge {

enum class KernelTarget { NNGP, NTK };

std::string to_string(KernelTarget t);

// Choice of the arbitrary signs on synthesized Hermite coefficients. The
// limiting kernel is sign-independent (coefficients enter squared); signs
// only affect finite-width fluctuations.
struct SignPolicy {
  enum class Kind { AllPositive, Explicit, FlipH2H3 };
  Kind kind = Kind::AllPositive;
  std::vector<int> signs;  // used by Explicit; entries +1/-1

  static SignPolicy all_positive() { return {}; }
  static SignPolicy explicit_signs(std::vector<int> s);
  // Flips the h_2 and h_3 coefficients; empirically reduces finite-width
  // kernel fluctuations for low-order polynomial activations.
  static SignPolicy flip_h2_h3() { return {Kind::FlipH2H3, {}}; }

  int sign(int k) const;
};

// The reverse-engineering core: the Hermite activation whose exact 1HL
// kernel (sigma_w=1, sigma_b=0) equals sum_k a_k c^k.
//   NNGP: |b_k| = sqrt(a_k)        NTK: |b_k| = sqrt(a_k / (1+k))
// Rejects series that fail the PSD check, naming the violating index.
hermite::HermiteSeries synthesize_activation(std::span<const double> kernel_series,
                                             KernelTarget target, const SignPolicy& signs);

struct FitConfig {
  int degree = 5;
  std::vector<double> c_grid;             // default: 41 equispaced on [-1,1]
  double endpoint_weight_fraction = 0.1;  // share of total weight on c=1

  static std::vector<double> default_grid(int n = 41);
};

struct FitResult {
  std::vector<double> coeffs;  // ascending degree
  double residual = 0.0;       // sup-norm over the grid
  int rank = 0;                // numerical rank of the design matrix
  bool rank_deficient = false;
};

// Weighted least-squares polynomial fit of an evaluable kernel. The c=1
// sample carries endpoint_weight_fraction of the total weight, the rest is
// uniform. Solved by column-pivoted QR; rank deficiency is reported, not
// silently truncated.
FitResult fit_polynomial(const std::function<double(double)>& kernel, const FitConfig& cfg);

// Zero out negative coefficients no smaller than -tol; anything below -tol
// means the target is genuinely outside the PSD cone at this degree and is
// rejected.
std::vector<double> clip_to_psd(std::span<const double> series, double tol);

struct Transform {
  enum class Kind { Derivative, Scale, Reflect };
  Kind kind = Kind::Derivative;
  double alpha = 1.0;  // Scale only

  static Transform derivative() { return {Kind::Derivative, 0.0}; }
  static Transform scale(double a) { return {Kind::Scale, a}; }
  static Transform reflect() { return {Kind::Reflect, 0.0}; }
};

// phi -> phi' | alpha phi | phi(-z) on the coefficient vector.
hermite::HermiteSeries transform_activation(const hermite::HermiteSeries& phi,
                                            const Transform& t);

// JSON for synthesized activations:
// {"hermite_coeffs": [...], "target": "ntk"|"nngp", "signs": [...]}.
std::string synthesized_to_json(const hermite::HermiteSeries& phi, KernelTarget target);

}  // namespace ntkforge
