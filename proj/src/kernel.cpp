#include "ntkforge/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "ntkforge/quadrature.hpp"

namespace ntkforge {

namespace {

constexpr double kCorrTol = 1e-12;

double clamp_corr(double c) {
  if (!std::isfinite(c)) throw std::domain_error("correlation must be finite");
  if (c > 1.0) {
    if (c > 1.0 + kCorrTol) throw std::domain_error("correlation above 1");
    return 1.0;
  }
  if (c < -1.0) {
    if (c < -1.0 - kCorrTol) throw std::domain_error("correlation below -1");
    return -1.0;
  }
  return c;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Panel edges: uniform base grid over [-range, range] plus any extra points
// (breakpoint images), sorted and deduplicated.
std::vector<double> panel_edges(double range, int panels, std::span<const double> extra) {
  std::vector<double> edges;
  edges.reserve(panels + 1 + extra.size());
  for (int i = 0; i <= panels; ++i) {
    edges.push_back(-range + 2.0 * range * i / panels);
  }
  for (double e : extra) {
    if (e > -range && e < range) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              edges.end());
  return edges;
}

// integral over [-range, range] of pdf(x) * f(x) dx by panel Gauss-Legendre.
double panel_integral(const std::function<double(double)>& f, const std::vector<double>& edges,
                      const QuadRule& gl) {
  double acc = 0.0;
  for (size_t p = 0; p + 1 < edges.size(); ++p) {
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    double panel = 0.0;
    for (int i = 0; i < gl.nodes.size(); ++i) {
      const double x = mid + half * gl.nodes[i];
      panel += gl.weights[i] * normal_pdf(x) * f(x);
    }
    acc += half * panel;
  }
  return acc;
}

}  // namespace

double eval_power_series(std::span<const double> series, double c) {
  double acc = 0.0;
  for (size_t k = series.size(); k-- > 0;) acc = acc * c + series[k];
  return acc;
}

PsdCheck check_psd(std::span<const double> series, double tol) {
  for (size_t k = 0; k < series.size(); ++k) {
    if (!std::isfinite(series[k]) || series[k] < -tol) {
      return {false, static_cast<int>(k)};
    }
  }
  return {true, -1};
}

double DotProductKernel::eval(double c) const {
  if (closed_form) return closed_form(c);
  if (series) return eval_power_series(*series, c);
  throw std::logic_error("DotProductKernel: no representation present");
}

void DotProductKernel::validate() const {
  if (!series && !closed_form) {
    throw std::invalid_argument("DotProductKernel: need a series or a closed form");
  }
  if (series) {
    const PsdCheck psd = check_psd(*series);
    if (!psd.ok) {
      throw std::invalid_argument("DotProductKernel: negative series coefficient at index " +
                                  std::to_string(psd.violating_index));
    }
    if (closed_form) {
      for (int i = 0; i < 41; ++i) {
        const double c = -1.0 + 2.0 * i / 40.0;
        const double a = eval_power_series(*series, c);
        const double b = closed_form(c);
        if (std::abs(a - b) > 1e-8) {
          throw std::invalid_argument(
              "DotProductKernel: series and closed form disagree at c=" + std::to_string(c));
        }
      }
    }
  }
}

std::string DotProductKernel::to_json() const {
  nlohmann::json j;
  if (series) j["series"] = *series;
  j["meta"] = {{"source", source},
               {"truncation", series ? static_cast<int>(series->size()) - 1 : -1}};
  return j.dump(2);
}

DotProductKernel DotProductKernel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  DotProductKernel k;
  if (j.contains("series")) k.series = j["series"].get<std::vector<double>>();
  if (j.contains("meta") && j["meta"].contains("source")) k.source = j["meta"]["source"];
  return k;
}

double tau_series(const hermite::HermiteSeries& phi, double c) {
  c = clamp_corr(c);
  double acc = 0.0;
  for (size_t k = phi.coeffs.size(); k-- > 0;) acc = acc * c + phi.coeffs[k] * phi.coeffs[k];
  return acc;
}

double tau_quadrature(const std::function<double(double)>& phi, double c, double sigma2, int q) {
  c = clamp_corr(c);
  if (sigma2 <= 0.0) throw std::invalid_argument("tau_quadrature: sigma2 must be positive");
  const double sig = std::sqrt(sigma2);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const QuadRule rule = gauss_hermite(q);
  double acc = 0.0;
  if (s == 0.0) {
    for (int i = 0; i < q; ++i) {
      const double u = rule.nodes[i];
      acc += rule.weights[i] * phi(sig * u) * phi(sig * c * u);
    }
  } else {
    for (int i = 0; i < q; ++i) {
      const double u = rule.nodes[i];
      const double fu = phi(sig * u);
      if (fu == 0.0) continue;
      double inner = 0.0;
      for (int j = 0; j < q; ++j) {
        inner += rule.weights[j] * phi(sig * (c * u + s * rule.nodes[j]));
      }
      acc += rule.weights[i] * fu * inner;
    }
  }
  if (!std::isfinite(acc)) {
    throw std::runtime_error("tau_quadrature: non-finite sum (phi not square-integrable)");
  }
  return acc;
}

double tau_quadrature_split(const std::function<double(double)>& phi,
                            std::span<const double> breakpoints, double c, double sigma2,
                            const PanelQuadOpts& opts) {
  c = clamp_corr(c);
  if (sigma2 <= 0.0) throw std::invalid_argument("tau_quadrature_split: sigma2 must be positive");
  const double sig = std::sqrt(sigma2);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const QuadRule gl = gauss_legendre(opts.nodes_per_panel);

  std::vector<double> u_breaks;
  for (double b : breakpoints) u_breaks.push_back(b / sig);

  if (s == 0.0) {
    // z2 = c * z1 exactly; a single 1D integral with both kink images.
    std::vector<double> all = u_breaks;
    if (c != 0.0) {
      for (double b : breakpoints) all.push_back(b / (sig * c));
    }
    const std::vector<double> edges = panel_edges(opts.range, opts.panels, all);
    const double r = panel_integral(
        [&](double u) { return phi(sig * u) * phi(sig * c * u); }, edges, gl);
    if (!std::isfinite(r)) throw std::runtime_error("tau_quadrature_split: non-finite sum");
    return r;
  }

  const std::vector<double> outer_edges = panel_edges(opts.range, opts.panels, u_breaks);
  double acc = 0.0;
  for (size_t p = 0; p + 1 < outer_edges.size(); ++p) {
    const double mid = 0.5 * (outer_edges[p] + outer_edges[p + 1]);
    const double half = 0.5 * (outer_edges[p + 1] - outer_edges[p]);
    double panel = 0.0;
    for (int i = 0; i < gl.nodes.size(); ++i) {
      const double u = mid + half * gl.nodes[i];
      const double fu = phi(sig * u);
      if (fu == 0.0) continue;
      std::vector<double> v_breaks;
      for (double b : breakpoints) v_breaks.push_back((b / sig - c * u) / s);
      const std::vector<double> inner_edges = panel_edges(opts.range, opts.panels, v_breaks);
      const double inner = panel_integral(
          [&](double v) { return phi(sig * (c * u + s * v)); }, inner_edges, gl);
      panel += gl.weights[i] * normal_pdf(u) * fu * inner;
    }
    acc += half * panel;
  }
  if (!std::isfinite(acc)) throw std::runtime_error("tau_quadrature_split: non-finite sum");
  return acc;
}

double tau_closed_form(NamedActivation name, double a, double c) {
  c = clamp_corr(c);
  const double a2 = a * a;
  switch (name) {
    case NamedActivation::Sin: return std::exp(-a2) * std::sinh(a2 * c);
    case NamedActivation::Cos: return std::exp(-a2) * std::cosh(a2 * c);
    case NamedActivation::Exp: return std::exp(a2 * (c + 1.0));
    case NamedActivation::Relu:
      return ((M_PI - std::acos(c)) * c + std::sqrt(std::max(0.0, 1.0 - c * c))) / (2.0 * M_PI);
    case NamedActivation::Erf:
      throw std::invalid_argument("tau_closed_form: erf is handled by decomposition");
  }
  throw std::logic_error("tau_closed_form: unreachable");
}

double ansatz_tau(const AnsatzParams& p, double c, double sigma2, bool deriv) {
  c = clamp_corr(c);
  if (sigma2 <= 0.0) throw std::invalid_argument("ansatz_tau: sigma2 must be positive");
  const double sig = std::sqrt(sigma2);
  const double t = sig * std::sqrt(std::max(0.0, 1.0 - c * c));  // sd of z2 | z1
  const double halfdt2 = 0.5 * p.delta * p.delta * t * t;
  const double att = std::exp(-halfdt2);  // cosine attenuation under smoothing

  // E[phi(z2) | z1], z2 | z1 ~ N(c z1, t^2); every ansatz term is analytic.
  const auto cond_mean = [&](double z1) {
    const double mu = c * z1;
    if (deriv) {
      double step;
      if (t > 0.0) {
        step = normal_cdf((mu - p.beta) / t);
      } else {
        step = mu > p.beta ? 1.0 : 0.0;
      }
      return p.alpha * step - p.gamma * p.delta * att * std::sin(p.delta * mu + p.epsilon) +
             p.zeta;
    }
    double relu;
    if (t > 0.0) {
      const double u = (mu - p.beta) / t;
      relu = (mu - p.beta) * normal_cdf(u) + t * normal_pdf(u);
    } else {
      relu = mu > p.beta ? mu - p.beta : 0.0;
    }
    return p.alpha * relu + p.gamma * att * std::cos(p.delta * mu + p.epsilon) + p.zeta * mu +
           p.eta;
  };
  const auto outer = [&](double y) {  // y = z1 / sig
    const double z1 = sig * y;
    const double g = deriv ? ansatz_deriv(p, z1) : ansatz_value(p, z1);
    return g * cond_mean(z1);
  };

  // Panels split at the phi kink and, when the conditional is steep or
  // discontinuous (|c| -> 1), at the image of the kink through z2 = c z1.
  std::vector<double> extra = {p.beta / sig};
  if (std::abs(c) > 1e-8) {
    const double zstar = p.beta / (c * sig);
    extra.push_back(zstar);
    if (t > 0.0 && t < 0.5 * sig) {
      const double w = 8.0 * t / (std::abs(c) * sig);
      extra.push_back(zstar - w);
      extra.push_back(zstar + w);
    }
  }
  const QuadRule gl = gauss_legendre(24);
  const std::vector<double> edges = panel_edges(9.0, 14, extra);
  const double r = panel_integral(outer, edges, gl);
  if (!std::isfinite(r)) throw std::runtime_error("ansatz_tau: non-finite integral");
  return r;
}

namespace {

// tau(c) and tau_{phi'}(c) evaluators at a fixed variance, with any Hermite
// decompositions done once.
struct TauEval {
  std::function<double(double)> tau;
  std::function<double(double)> tau_deriv;
};

TauEval make_tau_eval(const ActivationSpec& phi, double sigma2) {
  if (sigma2 <= 0.0) throw std::invalid_argument("tau: sigma2 must be positive");
  const double pref2 = phi.prefactor * phi.prefactor;
  const double sig = std::sqrt(sigma2);

  if (const auto* s = std::get_if<hermite::HermiteSeries>(&phi.form)) {
    hermite::HermiteSeries scaled;
    if (sig == 1.0) {
      scaled = *s;
    } else {
      // z -> phi(sig z) is a polynomial of the same degree; the quadrature
      // decomposition is exact.
      const hermite::HermiteSeries base = *s;
      scaled = hermite::decompose(
          [&](double z) { return hermite::series_eval(base, sig * z); }, base.order());
    }
    const hermite::HermiteSeries dscaled = hermite::series_derivative(scaled);
    return {[scaled, pref2](double c) { return pref2 * tau_series(scaled, c); },
            [dscaled, pref2, sigma2](double c) {
              return pref2 * tau_series(dscaled, c) / sigma2;
            }};
  }

  if (const auto* n = std::get_if<NamedSpec>(&phi.form)) {
    const double a = n->a;
    switch (n->kind) {
      case NamedActivation::Sin:
        return {[=](double c) { return pref2 * tau_closed_form(NamedActivation::Sin, a * sig, c); },
                [=](double c) {
                  const double as = a * sig;
                  return pref2 * a * a * std::exp(-as * as) * std::cosh(as * as * clamp_corr(c));
                }};
      case NamedActivation::Cos:
        return {[=](double c) { return pref2 * tau_closed_form(NamedActivation::Cos, a * sig, c); },
                [=](double c) {
                  const double as = a * sig;
                  return pref2 * a * a * std::exp(-as * as) * std::sinh(as * as * clamp_corr(c));
                }};
      case NamedActivation::Exp:
        return {[=](double c) { return pref2 * tau_closed_form(NamedActivation::Exp, a * sig, c); },
                [=](double c) {
                  const double as = a * sig;
                  return pref2 * a * a * std::exp(as * as * (clamp_corr(c) + 1.0));
                }};
      case NamedActivation::Relu:
        // Positive homogeneity: tau_relu(c; s^2) = s^2 tau_relu(c); the step
        // derivative is scale-free.
        return {[=](double c) {
                  return pref2 * sigma2 * tau_closed_form(NamedActivation::Relu, 1.0, c);
                },
                [=](double c) { return pref2 * (M_PI - std::acos(clamp_corr(c))) / (2.0 * M_PI); }};
      case NamedActivation::Erf: {
        const hermite::HermiteSeries g =
            hermite::decompose([sig](double z) { return std::erf(sig * z); }, 60, 160);
        const hermite::HermiteSeries dg = hermite::series_derivative(g);
        return {[g, pref2](double c) { return pref2 * tau_series(g, c); },
                [dg, pref2, sigma2](double c) { return pref2 * tau_series(dg, c) / sigma2; }};
      }
    }
  }

  if (const auto* a = std::get_if<AnsatzParams>(&phi.form)) {
    const AnsatzParams params = *a;
    return {[params, pref2, sigma2](double c) {
              return pref2 * ansatz_tau(params, c, sigma2, false);
            },
            [params, pref2, sigma2](double c) {
              return pref2 * ansatz_tau(params, c, sigma2, true);
            }};
  }

  const auto& cu = std::get<CustomActivation>(phi.form);
  return {[f = cu.f, pref2, sigma2](double c) { return pref2 * tau_quadrature(f, c, sigma2); },
          [df = cu.df, pref2, sigma2](double c) { return pref2 * tau_quadrature(df, c, sigma2); }};
}

}  // namespace

double tau_of(const ActivationSpec& phi, double c, double sigma2) {
  return make_tau_eval(phi, sigma2).tau(clamp_corr(c));
}

double tau_deriv_of(const ActivationSpec& phi, double c, double sigma2) {
  return make_tau_eval(phi, sigma2).tau_deriv(clamp_corr(c));
}

namespace {

void check_scales(const LayerScales& s) {
  if (!(s.sigma_w > 0.0)) throw std::invalid_argument("sigma_w must be positive");
  if (s.sigma_b < 0.0) throw std::invalid_argument("sigma_b must be nonnegative");
}

}  // namespace

double nngp_1hl(const ActivationSpec& phi, LayerScales scales, double c) {
  check_scales(scales);
  c = clamp_corr(c);
  const double sw2 = scales.sigma_w * scales.sigma_w;
  const double sb2 = scales.sigma_b * scales.sigma_b;
  const double sigma2 = sw2 + sb2;
  const double arg = clamp_corr((sw2 * c + sb2) / sigma2);
  return sw2 * tau_of(phi, arg, sigma2) + sb2;
}

double ntk_1hl(const ActivationSpec& phi, LayerScales scales, double c) {
  check_scales(scales);
  c = clamp_corr(c);
  const double sw2 = scales.sigma_w * scales.sigma_w;
  const double sb2 = scales.sigma_b * scales.sigma_b;
  const double sigma2 = sw2 + sb2;
  const double arg = clamp_corr((sw2 * c + sb2) / sigma2);
  const TauEval te = make_tau_eval(phi, sigma2);
  return sw2 * te.tau(arg) + sb2 + (sw2 * c + sb2) * te.tau_deriv(arg);
}

double ntk_closed_form(NamedActivation name, double a, double c) {
  c = clamp_corr(c);
  const double a2 = a * a;
  switch (name) {
    case NamedActivation::Exp: return std::exp(a2 * (1.0 + c)) * (1.0 + a2 * c);
    case NamedActivation::Sin:
      return std::exp(-a2) * (std::sinh(a2 * c) + a2 * c * std::cosh(a2 * c));
    case NamedActivation::Cos:
      return std::exp(-a2) * (std::cosh(a2 * c) + a2 * c * std::sinh(a2 * c));
    case NamedActivation::Relu:
      return (std::sqrt(std::max(0.0, 1.0 - c * c)) + 2.0 * c * (M_PI - std::acos(c))) /
             (2.0 * M_PI);
    case NamedActivation::Erf:
      throw std::invalid_argument("ntk_closed_form: no printed closed form for erf");
  }
  throw std::logic_error("ntk_closed_form: unreachable");
}

std::vector<double> nngp_series_1hl(const hermite::HermiteSeries& phi) {
  std::vector<double> a(phi.coeffs.size());
  for (size_t k = 0; k < a.size(); ++k) a[k] = phi.coeffs[k] * phi.coeffs[k];
  return a;
}

std::vector<double> ntk_series_1hl(const hermite::HermiteSeries& phi) {
  std::vector<double> a(phi.coeffs.size());
  for (size_t k = 0; k < a.size(); ++k) a[k] = phi.coeffs[k] * phi.coeffs[k] * (1.0 + k);
  return a;
}

DeepKernelValues deep_kernels(const ActivationSpec& phi, std::span<const LayerScales> scales,
                              int depth, double c) {
  std::vector<double> nngp, ntk;
  deep_kernels_grid(phi, scales, depth, std::span<const double>(&c, 1), nngp, ntk);
  return {nngp[0], ntk[0]};
}

void deep_kernels_grid(const ActivationSpec& phi, std::span<const LayerScales> scales, int depth,
                       std::span<const double> cs, std::vector<double>& nngp,
                       std::vector<double>& ntk) {
  if (depth < 1) throw std::invalid_argument("deep_kernels: depth must be >= 1");
  if (static_cast<int>(scales.size()) != depth + 1) {
    throw std::invalid_argument("deep_kernels: need scales for layers 0..depth");
  }
  for (const LayerScales& s : scales) check_scales(s);

  const size_t n = cs.size();
  nngp.assign(n, 0.0);
  ntk.assign(n, 0.0);
  const double sw0 = scales[0].sigma_w * scales[0].sigma_w;
  const double sb0 = scales[0].sigma_b * scales[0].sigma_b;
  for (size_t i = 0; i < n; ++i) {
    nngp[i] = sw0 * clamp_corr(cs[i]) + sb0;
    ntk[i] = nngp[i];
  }
  double k_at_one = sw0 + sb0;

  for (int layer = 1; layer <= depth; ++layer) {
    if (!(k_at_one > 0.0)) {
      throw std::runtime_error("deep_kernels: K(1) <= 0 (degenerate scale configuration)");
    }
    const TauEval te = make_tau_eval(phi, k_at_one);
    const double sw2 = scales[layer].sigma_w * scales[layer].sigma_w;
    const double sb2 = scales[layer].sigma_b * scales[layer].sigma_b;
    for (size_t i = 0; i < n; ++i) {
      const double rho = clamp_corr(nngp[i] / k_at_one);
      const double k_next = sw2 * te.tau(rho) + sb2;
      ntk[i] = k_next + ntk[i] * sw2 * te.tau_deriv(rho);
      nngp[i] = k_next;
    }
    k_at_one = sw2 * te.tau(1.0) + sb2;
  }
}

}  // namespace ntkforge
