#include "ntkforge/activation.hpp"

#include <cmath>

namespace ntkforge {

std::string to_string(NamedActivation name) {
  switch (name) {
    case NamedActivation::Exp: return "exp";
    case NamedActivation::Sin: return "sin";
    case NamedActivation::Cos: return "cos";
    case NamedActivation::Relu: return "relu";
    case NamedActivation::Erf: return "erf";
  }
  return "?";
}

NamedActivation named_activation_from_string(const std::string& s) {
  if (s == "exp") return NamedActivation::Exp;
  if (s == "sin") return NamedActivation::Sin;
  if (s == "cos") return NamedActivation::Cos;
  if (s == "relu") return NamedActivation::Relu;
  if (s == "erf") return NamedActivation::Erf;
  throw std::invalid_argument("unknown activation name: " + s);
}

double ansatz_value(const AnsatzParams& p, double z) {
  const double r = z > p.beta ? z - p.beta : 0.0;
  return p.alpha * r + p.gamma * std::cos(p.delta * z + p.epsilon) + p.zeta * z + p.eta;
}

double ansatz_deriv(const AnsatzParams& p, double z) {
  const double s = z > p.beta ? 1.0 : 0.0;
  return p.alpha * s - p.gamma * p.delta * std::sin(p.delta * z + p.epsilon) + p.zeta;
}

namespace {

double named_value(const NamedSpec& n, double z) {
  switch (n.kind) {
    case NamedActivation::Exp: return std::exp(n.a * z);
    case NamedActivation::Sin: return std::sin(n.a * z);
    case NamedActivation::Cos: return std::cos(n.a * z);
    case NamedActivation::Relu: return z > 0.0 ? z : 0.0;
    case NamedActivation::Erf: return std::erf(z);
  }
  return 0.0;
}

double named_deriv(const NamedSpec& n, double z) {
  switch (n.kind) {
    case NamedActivation::Exp: return n.a * std::exp(n.a * z);
    case NamedActivation::Sin: return n.a * std::cos(n.a * z);
    case NamedActivation::Cos: return -n.a * std::sin(n.a * z);
    case NamedActivation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case NamedActivation::Erf: return 2.0 / std::sqrt(M_PI) * std::exp(-z * z);
  }
  return 0.0;
}

}  // namespace

double ActivationSpec::value(double z) const {
  double v = 0.0;
  if (const auto* s = std::get_if<hermite::HermiteSeries>(&form)) {
    v = hermite::series_eval(*s, z);
  } else if (const auto* n = std::get_if<NamedSpec>(&form)) {
    v = named_value(*n, z);
  } else if (const auto* a = std::get_if<AnsatzParams>(&form)) {
    v = ansatz_value(*a, z);
  } else {
    v = std::get<CustomActivation>(form).f(z);
  }
  return prefactor * v;
}

double ActivationSpec::deriv(double z) const {
  double v = 0.0;
  if (const auto* s = std::get_if<hermite::HermiteSeries>(&form)) {
    v = hermite::series_eval(hermite::series_derivative(*s), z);
  } else if (const auto* n = std::get_if<NamedSpec>(&form)) {
    v = named_deriv(*n, z);
  } else if (const auto* a = std::get_if<AnsatzParams>(&form)) {
    v = ansatz_deriv(*a, z);
  } else {
    v = std::get<CustomActivation>(form).df(z);
  }
  return prefactor * v;
}

std::vector<double> ActivationSpec::breakpoints() const {
  if (const auto* n = std::get_if<NamedSpec>(&form)) {
    if (n->kind == NamedActivation::Relu) return {0.0};
    return {};
  }
  if (const auto* a = std::get_if<AnsatzParams>(&form)) return {a->beta};
  return {};
}

ActivationSpec ActivationSpec::hermite_series(hermite::HermiteSeries s, double prefactor) {
  return ActivationSpec{std::move(s), prefactor};
}

ActivationSpec ActivationSpec::named(NamedActivation kind, double a, double prefactor) {
  return ActivationSpec{NamedSpec{kind, a}, prefactor};
}

ActivationSpec ActivationSpec::ansatz(const AnsatzParams& p, double prefactor) {
  return ActivationSpec{p, prefactor};
}

ActivationSpec ActivationSpec::custom(std::function<double(double)> f,
                                      std::function<double(double)> df, double prefactor) {
  if (!f || !df) throw std::invalid_argument("custom activation requires f and df");
  return ActivationSpec{CustomActivation{std::move(f), std::move(df)}, prefactor};
}

}  // namespace ntkforge
