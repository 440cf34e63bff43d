// Test-only reference implementations, independent of the library paths they
// check: composite Simpson integration, the explicit double-factorial Hermite
// formula, finite differences, and a randomly-shifted lattice Monte Carlo
// estimator for bivariate Gaussian expectations.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracles {

// Composite Simpson over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 4000) {
  if (n % 2 == 1) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// E_{z~N(0,1)}[f(z)] by Simpson on [-12, 12].
inline double gauss_expect(const std::function<double(double)>& f, int n = 8000) {
  return simpson([&](double z) { return std::exp(-0.5 * z * z) * f(z); }, -12.0, 12.0, n) /
         std::sqrt(2.0 * M_PI);
}

// Normalized probabilist's Hermite polynomial from the explicit sum
// h_k(z) = sum_{l, k-l even} (-1)^{(k-l)/2} sqrt(k!) / ((k-l)!! l!) z^l.
inline double hermite_explicit(int k, double z) {
  auto dfact = [](int n) {
    double r = 1.0;
    for (int i = n; i > 1; i -= 2) r *= i;
    return r;
  };
  double sqrt_kfact = 1.0;
  for (int i = 2; i <= k; ++i) sqrt_kfact *= i;
  sqrt_kfact = std::sqrt(sqrt_kfact);
  double acc = 0.0;
  for (int l = k % 2; l <= k; l += 2) {
    double lfact = 1.0;
    for (int i = 2; i <= l; ++i) lfact *= i;
    const int m = (k - l) / 2;
    const double term = ((m % 2 == 0) ? 1.0 : -1.0) * sqrt_kfact / (dfact(k - l) * lfact);
    acc += term * std::pow(z, l);
  }
  return acc;
}

// Central difference of f at x.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-4) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// k-th derivative at 0 by the central binomial stencil with two Richardson
// steps (O(h^6)).
inline double derivative_at_zero(const std::function<double(double)>& f, int k, double h) {
  auto stencil = [&](double step) {
    double acc = 0.0;
    double binom = 1.0;
    for (int j = 0; j <= k; ++j) {
      acc += ((j % 2 == 0) ? 1.0 : -1.0) * binom * f((0.5 * k - j) * step);
      binom *= static_cast<double>(k - j) / (j + 1);
    }
    return acc / std::pow(step, k);
  };
  const double d1 = stencil(h);
  const double d2 = stencil(0.5 * h);
  const double d4 = stencil(0.25 * h);
  const double r1 = (4.0 * d2 - d1) / 3.0;
  const double r2 = (4.0 * d4 - d2) / 3.0;
  return (16.0 * r2 - r1) / 15.0;
}

// Acklam's rational approximation of the standard normal quantile
// (relative error ~1e-9; plenty for a sampling oracle).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Monte Carlo estimate of E[f(z1) g(z2)] over centered bivariate normals
// with unit variances and correlation c, using a randomly-shifted Fibonacci
// lattice with n points (unbiased; far lower variance than iid draws).
inline double bivariate_mc(const std::function<double(double)>& f,
                           const std::function<double(double)>& g, double c, int n,
                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double shift1 = unif(rng), shift2 = unif(rng);
  const double golden = 0.6180339887498949;
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double p1 = (i + 0.5) / n + shift1;
    p1 -= std::floor(p1);
    double p2 = i * golden + shift2;
    p2 -= std::floor(p2);
    p1 = std::min(std::max(p1, 1e-12), 1.0 - 1e-12);
    p2 = std::min(std::max(p2, 1e-12), 1.0 - 1e-12);
    const double z1 = normal_quantile(p1);
    const double z2 = c * z1 + s * normal_quantile(p2);
    acc += f(z1) * g(z2);
  }
  return acc / n;
}

}  // namespace oracles
