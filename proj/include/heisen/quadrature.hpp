// Gauss rules via the Golub-Welsch eigenvalue method.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <vector>

namespace heisen::quad {

struct rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
// Symmetric Jacobi matrix with zero diagonal and off-diagonals beta[k], k=1..n-1.
inline rule golub_welsch(int n, const std::vector<double>& beta, double mu0) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = beta[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    r.weights[i] = mu0 * v * v;
  }
  return r;
}
}  // namespace detail

/// Nodes and weights for the integral of f(x) e^{-x^2} over the real line.
inline rule gauss_hermite(int n) {
  std::vector<double> beta(n, 0.0);
  for (int k = 1; k < n; ++k) beta[k] = std::sqrt(k / 2.0);
  return detail::golub_welsch(n, beta, std::sqrt(std::numbers::pi));
}

/// Nodes and weights for the integral of f(x) over [a, b].
inline rule gauss_legendre(int n, double a = -1.0, double b = 1.0) {
  std::vector<double> beta(n, 0.0);
  for (int k = 1; k < n; ++k) beta[k] = k / std::sqrt(4.0 * k * k - 1.0);
  rule r = detail::golub_welsch(n, beta, 2.0);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

}  // namespace heisen::quad
