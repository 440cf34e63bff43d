#include "ntkforge/hermite.hpp"

#include <cmath>
#include <stdexcept>

#include "ntkforge/quadrature.hpp"

namespace ntkforge::hermite {

double eval(int k, double z) {
  if (k < 0) throw std::invalid_argument("hermite::eval: k must be >= 0");
  if (!std::isfinite(z)) throw std::invalid_argument("hermite::eval: z must be finite");
  if (k == 0) return 1.0;
  if (k == 1) return z;
  double hm2 = 1.0, hm1 = z, h = 0.0;
  for (int j = 2; j <= k; ++j) {
    h = (z / std::sqrt(static_cast<double>(j))) * hm1 - std::sqrt((j - 1.0) / j) * hm2;
    hm2 = hm1;
    hm1 = h;
  }
  return h;
}

std::vector<double> eval_all(int K, double z) {
  if (K < 0) throw std::invalid_argument("hermite::eval_all: K must be >= 0");
  if (!std::isfinite(z)) throw std::invalid_argument("hermite::eval_all: z must be finite");
  std::vector<double> h(K + 1);
  h[0] = 1.0;
  if (K >= 1) h[1] = z;
  for (int j = 2; j <= K; ++j) {
    h[j] = (z / std::sqrt(static_cast<double>(j))) * h[j - 1] - std::sqrt((j - 1.0) / j) * h[j - 2];
  }
  return h;
}

std::vector<double> monomial_coeffs(int k) {
  if (k < 0) throw std::invalid_argument("hermite::monomial_coeffs: k must be >= 0");
  if (k > 30) {
    throw std::range_error(
        "hermite::monomial_coeffs: k > 30 rejected (factorial growth); "
        "use the recurrence-based evaluation instead");
  }
  // Build the coefficient vectors with the same recurrence used for values.
  std::vector<double> pm2 = {1.0};
  if (k == 0) return pm2;
  std::vector<double> pm1 = {0.0, 1.0};
  if (k == 1) return pm1;
  std::vector<double> p;
  for (int j = 2; j <= k; ++j) {
    p.assign(j + 1, 0.0);
    const double inv = 1.0 / std::sqrt(static_cast<double>(j));
    for (int d = 0; d < static_cast<int>(pm1.size()); ++d) p[d + 1] += inv * pm1[d];
    const double s = std::sqrt((j - 1.0) / j);
    for (int d = 0; d < static_cast<int>(pm2.size()); ++d) p[d] -= s * pm2[d];
    pm2 = pm1;
    pm1 = p;
  }
  return p;
}

HermiteSeries decompose(const std::function<double(double)>& f, int K, int Q) {
  if (K < 0) throw std::invalid_argument("hermite::decompose: K must be >= 0");
  if (Q <= 0) Q = std::max(2 * K + 2, 64);
  const QuadRule rule = gauss_hermite(Q);
  std::vector<double> b(K + 1, 0.0);
  for (int i = 0; i < Q; ++i) {
    const double z = rule.nodes[i];
    const double wf = rule.weights[i] * f(z);
    const std::vector<double> h = eval_all(K, z);
    for (int k = 0; k <= K; ++k) b[k] += wf * h[k];
  }
  for (double bk : b) {
    if (!std::isfinite(bk)) {
      throw std::runtime_error(
          "hermite::decompose: non-finite quadrature sum; "
          "f is not integrable under the Gaussian measure at this scale");
    }
  }
  return HermiteSeries{std::move(b)};
}

double series_eval(const HermiteSeries& s, double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("hermite::series_eval: z must be finite");
  if (s.coeffs.empty()) return 0.0;
  double acc = s.coeffs[0];
  if (s.coeffs.size() == 1) return acc;
  double hm2 = 1.0, hm1 = z;
  acc += s.coeffs[1] * z;
  for (int j = 2; j < static_cast<int>(s.coeffs.size()); ++j) {
    const double h = (z / std::sqrt(static_cast<double>(j))) * hm1 - std::sqrt((j - 1.0) / j) * hm2;
    acc += s.coeffs[j] * h;
    hm2 = hm1;
    hm1 = h;
  }
  return acc;
}

HermiteSeries series_derivative(const HermiteSeries& s) {
  if (s.coeffs.size() <= 1) return HermiteSeries{{0.0}};
  std::vector<double> d(s.coeffs.size() - 1);
  for (int k = 1; k < static_cast<int>(s.coeffs.size()); ++k) {
    d[k - 1] = std::sqrt(static_cast<double>(k)) * s.coeffs[k];
  }
  return HermiteSeries{std::move(d)};
}

}  // namespace ntkforge::hermite
