#include "sgcweak/recursive_moments.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sgcweak/parallel.hpp"

namespace sgcweak {

Eigen::VectorXd ConsBasis::project(const Eigen::VectorXd& v) const {
  if (v.size() != M) throw InvalidArgument("ConsBasis::project: grid size mismatch");
  return (kTwoPi / M) * (E.transpose() * v);
}

Eigen::VectorXd ConsBasis::synthesize(const Eigen::VectorXd& c) const {
  if (c.size() != lstar) throw InvalidArgument("ConsBasis::synthesize: coefficient count mismatch");
  return E * c;
}

ConsBasis build_cons_basis(int lstar, int M) {
  if (lstar < 1) throw InvalidArgument("build_cons_basis: l* must be positive");
  if (M < 4 || M % 2 != 0) throw InvalidArgument("build_cons_basis: M must be even and >= 4");
  if (lstar > M / 2) {
    throw InvalidArgument("build_cons_basis: l* = " + std::to_string(lstar) + " exceeds M/2 = " +
                          std::to_string(M / 2) + " (aliasing)");
  }
  ConsBasis b;
  b.lstar = lstar;
  b.M = M;
  b.x = make_collocation_grid(M).x;
  b.E.resize(M, lstar);
  const double c0 = 1.0 / std::sqrt(kTwoPi);
  const double c1 = 1.0 / std::sqrt(std::numbers::pi);
  b.E.col(0).setConstant(c0);
  for (int i = 1; i < lstar; ++i) {
    const int j = (i + 1) / 2;
    if (i % 2 == 1) {
      b.E.col(i) = c1 * (j * b.x.array()).cos();
    } else {
      b.E.col(i) = c1 * (j * b.x.array()).sin();
    }
  }
  return b;
}

NoiseQuadrature noise_quadrature(const QuadratureRule1D<double>& rule) {
  NoiseQuadrature q;
  q.nodes = rule.nodes.transpose();
  q.weights = rule.weights;
  return q;
}

NoiseQuadrature noise_quadrature(const SparseGridRule<double>& rule) {
  NoiseQuadrature q;
  q.nodes = rule.dense_nodes();
  q.weights = rule.weights();
  return q;
}

PropagatorTensors one_step_propagators(const LinearSpde& spde, const ConsBasis& basis, double h,
                                       const NoiseQuadrature& quad, int workers, double cutoff_p) {
  if (spde.Atilde.rows() != basis.M) throw InvalidArgument("one_step_propagators: grid size mismatch");
  if (quad.nodes.rows() != spde.noises()) {
    throw InvalidArgument("one_step_propagators: quadrature dimension " + std::to_string(quad.nodes.rows()) +
                          " does not match " + std::to_string(spde.noises()) + " noises");
  }
  if (quad.nodes.cols() != quad.weights.size() || quad.weights.size() == 0) {
    throw InvalidArgument("one_step_propagators: malformed quadrature");
  }
  const auto P = static_cast<std::size_t>(quad.weights.size());
  const double c = kTwoPi / basis.M;
  PropagatorTensors out;
  out.qH.resize(P);
  out.qO.resize(P);
  out.weights = quad.weights;
  parallel_for(P, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const Eigen::VectorXd y =
          quad.nodes.col(static_cast<Eigen::Index>(p)).unaryExpr([&](double v) { return clip_gaussian(v, h, cutoff_p); });
      AffineStep step;
      try {
        step = linear_trapezoidal_step(spde, h, y);
      } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " at quadrature node " + std::to_string(p));
      }
      out.qH[p] = c * (basis.E.transpose() * (step.P * basis.E));
      out.qO[p] = c * (basis.E.transpose() * step.s);
    }
  });
  return out;
}

ExpectationTensors expectation_tensors(const PropagatorTensors& props) {
  const int n = props.lstar();
  if (n == 0) throw InvalidArgument("expectation_tensors: no quadrature nodes");
  if (n > kMaxDenseTruncation) {
    throw ResourceLimitError("expectation_tensors: l* = " + std::to_string(n) + " exceeds the dense limit " +
                                 std::to_string(kMaxDenseTruncation),
                             static_cast<double>(n) * n * n * n);
  }
  if (std::abs(props.weights.sum() - 1.0) > 1e-12) {
    throw InvalidArgument("expectation_tensors: weights must sum to 1");
  }
  ExpectationTensors t;
  t.EqO = Eigen::VectorXd::Zero(n);
  t.EqH = Eigen::MatrixXd::Zero(n, n);
  t.EqOqO = Eigen::MatrixXd::Zero(n, n);
  t.EqOqH = Eigen::MatrixXd::Zero(n, n * n);
  t.EqHqH = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index p = 0; p < props.weights.size(); ++p) {
    const double w = props.weights(p);
    const Eigen::MatrixXd& qH = props.qH[p];
    const Eigen::VectorXd& qO = props.qO[p];
    t.EqO += w * qO;
    t.EqH += w * qH;
    t.EqOqO += w * qO * qO.transpose();
    t.EqOqH += w * qO * qH.reshaped().transpose();
    // Kronecker product qH (x) qH.
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) t.EqHqH.block(a * n, b * n, n, n) += (w * qH(a, b)) * qH;
    }
  }
  return t;
}

MomentState initial_moment_state(const Eigen::VectorXd& c0) {
  MomentState s;
  s.M = c0;
  s.C = c0 * c0.transpose();
  return s;
}

MomentState recursion_step(const MomentState& state, const ExpectationTensors& t) {
  const int n = t.lstar();
  if (state.M.size() != n || state.C.rows() != n || state.C.cols() != n) {
    throw InvalidArgument("recursion_step: state and tensors disagree on l*");
  }
  MomentState next;
  next.k = state.k + 1;
  next.M = t.EqO + t.EqH * state.M;
  // F(i, j) = sum_l E[qO_i qH_jl] M_l
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < n; ++l) F += state.M(l) * t.EqOqH.middleCols(static_cast<Eigen::Index>(n) * l, n);
  const Eigen::VectorXd kc = t.EqHqH * state.C.reshaped();
  Eigen::MatrixXd C = t.EqOqO + F + F.transpose() + kc.reshaped(n, n);
  next.C = 0.5 * (C + C.transpose());
  return next;
}

MomentState run_recursive_moments(const LinearSpde& spde, const ConsBasis& basis, const Eigen::VectorXd& u0, double h,
                                  double T, const NoiseQuadrature& quad, const MomentObserver& observer, int workers) {
  const int steps = step_count(T, h);
  MomentState state = initial_moment_state(basis.project(u0));
  if (observer) observer(state);
  if (steps == 0) return state;
  const ExpectationTensors t = expectation_tensors(one_step_propagators(spde, basis, h, quad, workers));
  for (int k = 0; k < steps; ++k) {
    state = recursion_step(state, t);
    if (observer) observer(state);
  }
  return state;
}

Eigen::VectorXd second_moment_field(const MomentState& state, const ConsBasis& basis) {
  if (state.C.rows() != basis.lstar) throw InvalidArgument("second_moment_field: dimension mismatch");
  return (basis.E * state.C).cwiseProduct(basis.E).rowwise().sum();
}

Eigen::VectorXd mean_field(const MomentState& state, const ConsBasis& basis) { return basis.synthesize(state.M); }

Eigen::VectorXd advdiff_exact_mean(const Eigen::VectorXd& x, double eps, double sigma, double t) {
  return std::exp(-(eps * eps + sigma * sigma) * t / 2) * x.array().cos();
}

Eigen::VectorXd advdiff_exact_second_moment(const Eigen::VectorXd& x, double eps, double sigma, double t) {
  return std::exp(-eps * eps * t) * (0.5 + 0.5 * std::exp(-2 * sigma * sigma * t) * (2 * x.array()).cos());
}

}  // namespace sgcweak
