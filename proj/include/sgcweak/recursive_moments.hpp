#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sgcweak/hermite_quadrature.hpp"
#include "sgcweak/sparse_grid.hpp"
#include "sgcweak/spectral_spde.hpp"

namespace sgcweak {

/// Trigonometric basis on (0, 2pi) evaluated on a collocation grid.
/// Column i of E holds e_{i+1}: 1/sqrt(2pi), cos(jx)/sqrt(pi), sin(jx)/sqrt(pi), ...
struct ConsBasis {
  int lstar = 0;
  int M = 0;
  Eigen::VectorXd x;
  Eigen::MatrixXd E;  // M x lstar

  /// Coefficients (2pi/M) E^T v of a grid function.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  /// Grid values of sum_i c_i e_i.
  Eigen::VectorXd synthesize(const Eigen::VectorXd& c) const;
};

/// l* <= M/2, M even. Even l* is accepted and simply ends on a cosine.
ConsBasis build_cons_basis(int lstar, int M);

/// Quadrature nodes (one column per node, one row per noise) and weights.
struct NoiseQuadrature {
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
};

NoiseQuadrature noise_quadrature(const QuadratureRule1D<double>& rule);
NoiseQuadrature noise_quadrature(const SparseGridRule<double>& rule);

struct PropagatorTensors {
  std::vector<Eigen::MatrixXd> qH;  // qH[p](i, l) = (u_H(e_l; y_p), e_i)
  std::vector<Eigen::VectorXd> qO;  // qO[p](i) = (u_O(y_p), e_i)
  Eigen::VectorXd weights;

  int lstar() const { return qO.empty() ? 0 : static_cast<int>(qO.front().size()); }
};

/**
 * One-step solutions for every quadrature node. Node coordinates are clipped
 * at the Gaussian cutoff for h before use. Nodes are processed on `workers`
 * threads; results do not depend on the worker count.
 */
PropagatorTensors one_step_propagators(const LinearSpde& spde, const ConsBasis& basis, double h,
                                       const NoiseQuadrature& quad, int workers = 1, double cutoff_p = 1.0);

/**
 * Quadrature estimates of the one-step moments. The fourth-order tensor is
 * kept as an l*^2 x l*^2 matrix K acting on column-major vec(C):
 * K(i + l* j, l + l* p) = E[qH(i,l) qH(j,p)]. Likewise EqOqH(i, j + l* l) = E[qO(i) qH(j,l)].
 */
struct ExpectationTensors {
  Eigen::VectorXd EqO;
  Eigen::MatrixXd EqH;
  Eigen::MatrixXd EqOqO;
  Eigen::MatrixXd EqOqH;
  Eigen::MatrixXd EqHqH;

  int lstar() const { return static_cast<int>(EqO.size()); }
  double eqhqh(int i, int l, int j, int p) const { return EqHqH(i + lstar() * j, l + lstar() * p); }
  double eqoqh(int i, int j, int l) const { return EqOqH(i, j + lstar() * l); }
};

inline constexpr int kMaxDenseTruncation = 32;

ExpectationTensors expectation_tensors(const PropagatorTensors& props);

struct MomentState {
  int k = 0;
  Eigen::VectorXd M;
  Eigen::MatrixXd C;
};

/// Deterministic initial state: M = c0, C = c0 c0^T.
MomentState initial_moment_state(const Eigen::VectorXd& c0);

MomentState recursion_step(const MomentState& state, const ExpectationTensors& t);

using MomentObserver = std::function<void(const MomentState&)>;

/// Runs T/h recursion steps from the projection of u0; the observer sees every state including k = 0.
MomentState run_recursive_moments(const LinearSpde& spde, const ConsBasis& basis, const Eigen::VectorXd& u0, double h,
                                  double T, const NoiseQuadrature& quad, const MomentObserver& observer = {},
                                  int workers = 1);

/// E u^k(x)^2 = sum_ij C_ij e_i(x) e_j(x) on the basis grid.
Eigen::VectorXd second_moment_field(const MomentState& state, const ConsBasis& basis);
Eigen::VectorXd mean_field(const MomentState& state, const ConsBasis& basis);

/// Exact moments of du = eps^2/2 u_xx dt + sigma u_x dw, u(0) = cos x (advection off).
Eigen::VectorXd advdiff_exact_mean(const Eigen::VectorXd& x, double eps, double sigma, double t);
Eigen::VectorXd advdiff_exact_second_moment(const Eigen::VectorXd& x, double eps, double sigma, double t);

}  // namespace sgcweak
