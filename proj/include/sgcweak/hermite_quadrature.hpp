#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "sgcweak/errors.hpp"

namespace sgcweak {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr int kMaxHermiteOrder = 64;

/**
 * n-point Gauss-Hermite rule for the standard normal density
 * exp(-y^2/2)/sqrt(2 pi). Nodes are strictly ascending and symmetric about
 * zero, weights are positive and sum to one.
 */
template <typename Scalar>
struct QuadratureRule1D {
  int order = 0;
  Vector<Scalar> nodes;
  Vector<Scalar> weights;

  Eigen::Index size() const { return nodes.size(); }
};

using QuadratureRule = QuadratureRule1D<double>;

/// E[Y^p] for Y ~ N(0,1): (p-1)!! for even p, 0 for odd p.
template <typename Scalar = double>
Scalar gaussian_moment(int p) {
  if (p < 0) throw InvalidArgument("gaussian_moment: negative power");
  if (p % 2 == 1) return Scalar(0);
  Scalar m(1);
  for (int k = p - 1; k > 1; k -= 2) m *= Scalar(k);
  return m;
}

namespace detail {

// Orthonormal probabilists' Hermite values p_0..p_n at y, where
// p_k = He_k / sqrt(k!). Returns {p_n, p_{n-1}, sum_{k<n} p_k^2}.
template <typename Scalar>
struct HermiteEval {
  Scalar pn;
  Scalar pn1;
  Scalar christoffel;
};

template <typename Scalar>
HermiteEval<Scalar> orthonormal_hermite(int n, Scalar y) {
  using std::sqrt;
  Scalar prev(0);
  Scalar cur(1);
  Scalar sum(0);
  for (int k = 0; k < n; ++k) {
    sum += cur * cur;
    // sqrt(k+1) p_{k+1} = y p_k - sqrt(k) p_{k-1}
    const Scalar next = (y * cur - sqrt(Scalar(k)) * prev) / sqrt(Scalar(k + 1));
    prev = cur;
    cur = next;
  }
  return {cur, prev, sum};
}

}  // namespace detail

/**
 * Golub-Welsch on the symmetric Jacobi matrix of the probabilists' Hermite
 * recurrence (off-diagonal sqrt(k)), one Newton polish per node, Christoffel
 * weights 1/sum_k p_k(y)^2, then exact symmetrisation and normalisation.
 */
template <typename Scalar = double>
QuadratureRule1D<Scalar> gauss_hermite_rule(int n) {
  if (n < 1 || n > kMaxHermiteOrder) {
    throw InvalidArgument("gauss_hermite_rule: order " + std::to_string(n) +
                          " outside [1, " + std::to_string(kMaxHermiteOrder) + "]");
  }
  using std::sqrt;
  QuadratureRule1D<Scalar> rule;
  rule.order = n;
  rule.nodes.resize(n);
  rule.weights.resize(n);

  if (n == 1) {
    rule.nodes(0) = Scalar(0);
    rule.weights(0) = Scalar(1);
    return rule;
  }

  Vector<Scalar> diag = Vector<Scalar>::Zero(n);
  Vector<Scalar> sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = sqrt(Scalar(k));

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw SolverError("gauss_hermite_rule: tridiagonal eigensolver failed");
  }
  Vector<Scalar> y = solver.eigenvalues();

  for (int i = 0; i < n; ++i) {
    const auto e = detail::orthonormal_hermite(n, y(i));
    // p_n' = sqrt(n) p_{n-1}
    y(i) -= e.pn / (sqrt(Scalar(n)) * e.pn1);
    rule.weights(i) = Scalar(1) / detail::orthonormal_hermite(n, y(i)).christoffel;
  }

  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const Scalar node = (y(j) - y(i)) / Scalar(2);
    const Scalar weight = (rule.weights(i) + rule.weights(j)) / Scalar(2);
    rule.nodes(i) = -node;
    rule.nodes(j) = node;
    rule.weights(i) = weight;
    rule.weights(j) = weight;
  }
  if (n % 2 == 1) rule.nodes(n / 2) = Scalar(0);
  if (n % 2 == 1) rule.weights(n / 2) = Scalar(1) / detail::orthonormal_hermite(n, Scalar(0)).christoffel;

  rule.weights /= rule.weights.sum();
  return rule;
}

/// Sum_i w_i psi(y_i).
template <typename Scalar, typename Fn>
Scalar quadrature_sum(const QuadratureRule1D<Scalar>& rule, Fn&& psi) {
  Scalar acc(0);
  for (Eigen::Index i = 0; i < rule.size(); ++i) acc += rule.weights(i) * psi(rule.nodes(i));
  return acc;
}

}  // namespace sgcweak
