#include "ntkforge/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace ntkforge {

namespace {

// Golub-Welsch nodes: eigenvalues of the Jacobi matrix of the
// orthogonal-polynomial recurrence.
Eigen::VectorXd golub_welsch_nodes(const Eigen::VectorXd& diag, const Eigen::VectorXd& subdiag) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("quadrature: tridiagonal eigensolve failed");
  }
  return es.eigenvalues();
}

}  // namespace

QuadRule gauss_hermite(int q) {
  if (q < 1) throw std::invalid_argument("gauss_hermite: q must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd sub(q - 1 > 0 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  QuadRule rule;
  rule.nodes = golub_welsch_nodes(diag, sub);
  // Weights from the Christoffel function, w_i = 1 / sum_{k<q} h_k(x_i)^2.
  // The eigenvector shortcut puts eps^2-level absolute noise on the tiny
  // extreme-node weights, which then multiplies huge high-order integrands;
  // this form keeps every weight relatively accurate.
  rule.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    const double x = rule.nodes[i];
    double hm1 = 1.0, h = x, sum = 1.0 + x * x;
    for (int k = 2; k < q; ++k) {
      const double hk = (x / std::sqrt(static_cast<double>(k))) * h - std::sqrt((k - 1.0) / k) * hm1;
      sum += hk * hk;
      hm1 = h;
      h = hk;
    }
    rule.weights[i] = 1.0 / sum;
  }
  return rule;
}

QuadRule gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: q must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd sub(q - 1 > 0 ? q - 1 : 0);
  for (int k = 1; k < q; ++k) {
    sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  }
  QuadRule rule;
  rule.nodes = golub_welsch_nodes(diag, sub);
  // w_i = 2 / sum_{k<q} (2k+1) P_k(x_i)^2 (orthonormal Legendre Christoffel
  // form).
  rule.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    const double x = rule.nodes[i];
    double pm1 = 1.0, p = x, sum = 1.0 + 3.0 * x * x;
    for (int k = 2; k < q; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p - (k - 1.0) * pm1) / k;
      sum += (2.0 * k + 1.0) * pk * pk;
      pm1 = p;
      p = pk;
    }
    rule.weights[i] = 2.0 / sum;
  }
  return rule;
}

}  // namespace ntkforge
