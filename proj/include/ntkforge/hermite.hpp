#pragma once

#include <functional>
#include <vector>

namespace ntkforge::hermite {

// An activation function phi(z) = sum_k coeffs[k] * h_k(z) on the normalized
// probabilist's Hermite basis (orthonormal under the standard Gaussian).
struct HermiteSeries {
  std::vector<double> coeffs;  // b_0 .. b_K

  HermiteSeries() = default;
  explicit HermiteSeries(std::vector<double> c) : coeffs(std::move(c)) {}
  int order() const { return static_cast<int>(coeffs.size()) - 1; }
};

// h_k(z) by the forward three-term recurrence
//   h_k = (z/sqrt(k)) h_{k-1} - sqrt((k-1)/k) h_{k-2},  h_0 = 1, h_1 = z.
// Rejects non-finite z.
double eval(int k, double z);

// h_0(z) .. h_K(z) in one recurrence sweep.
std::vector<double> eval_all(int K, double z);

// Monomial coefficients of h_k in ascending degree, exact to machine
// precision. k > 30 is rejected (factorial growth makes the expansion
// meaningless in double precision); the series representation stays usable
// at any k through the recurrence.
std::vector<double> monomial_coeffs(int k);

// Hermite coefficients b_k = E_{z~N(0,1)}[h_k(z) f(z)] for k = 0..K,
// approximated by Q-node Gauss-Hermite quadrature. Exact for polynomial f of
// degree <= K when Q >= K+1. Q = 0 selects the default max(2K+2, 64).
// Throws if the quadrature sum is non-finite (f not square-integrable or
// numerically exploding).
HermiteSeries decompose(const std::function<double(double)>& f, int K, int Q = 0);

// sum_k b_k h_k(z) in a single recurrence sweep.
double series_eval(const HermiteSeries& s, double z);

// Termwise derivative: h_k' = sqrt(k) h_{k-1}, so b'_{k-1} = sqrt(k) b_k.
HermiteSeries series_derivative(const HermiteSeries& s);

}  // namespace ntkforge::hermite
