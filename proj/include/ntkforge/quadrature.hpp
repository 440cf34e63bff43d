#pragma once

#include <Eigen/Dense>

namespace ntkforge {

// Quadrature rule: approximate an integral by sum_i weights[i] * f(nodes[i]).
struct QuadRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

// Gauss-Hermite rule for the standard normal weight e^{-z^2/2}/sqrt(2*pi).
// Weights sum to 1; exact for polynomials of degree <= 2q-1.
// Nodes are computed by Golub-Welsch (symmetric tridiagonal eigenproblem),
// so any q is available without tabulated nodes.
QuadRule gauss_hermite(int q);

// Gauss-Legendre rule on [-1, 1] (unit weight, weights sum to 2).
QuadRule gauss_legendre(int q);

}  // namespace ntkforge
