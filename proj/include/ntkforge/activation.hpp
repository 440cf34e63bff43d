#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ntkforge/hermite.hpp"

namespace ntkforge {

enum class NamedActivation { Exp, Sin, Cos, Relu, Erf };

std::string to_string(NamedActivation name);
NamedActivation named_activation_from_string(const std::string& s);

// phi(z) = alpha * relu(z - beta) + gamma * cos(delta z + epsilon) + zeta z + eta
struct AnsatzParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;
  double zeta = 0.0;
  double eta = 0.0;
};

double ansatz_value(const AnsatzParams& p, double z);
// alpha * step(z - beta) - gamma * delta * sin(delta z + epsilon) + zeta
double ansatz_deriv(const AnsatzParams& p, double z);

struct NamedSpec {
  NamedActivation kind = NamedActivation::Relu;
  double a = 1.0;  // frequency/rate for exp, sin, cos; ignored by relu and erf
};

struct CustomActivation {
  std::function<double(double)> f;
  std::function<double(double)> df;  // analytic derivative, required
};

// An activation function, one of:
//   - a Hermite series (the synthesis output),
//   - a named closed form exp(az) | sin(az) | cos(az) | relu | erf,
//   - the ReLU+cosine mimic ansatz,
//   - an arbitrary pointwise function with analytic derivative.
// `prefactor` scales the whole function: phi(z) = prefactor * base(z).
struct ActivationSpec {
  std::variant<hermite::HermiteSeries, NamedSpec, AnsatzParams, CustomActivation> form;
  double prefactor = 1.0;

  double value(double z) const;
  double deriv(double z) const;

  // z-locations where value or derivative is non-smooth (relu kink, ansatz
  // kink); empty for smooth activations. Used by the quadrature engine.
  std::vector<double> breakpoints() const;

  static ActivationSpec hermite_series(hermite::HermiteSeries s, double prefactor = 1.0);
  static ActivationSpec named(NamedActivation kind, double a = 1.0, double prefactor = 1.0);
  static ActivationSpec ansatz(const AnsatzParams& p, double prefactor = 1.0);
  static ActivationSpec custom(std::function<double(double)> f,
                               std::function<double(double)> df, double prefactor = 1.0);
};

}  // namespace ntkforge
