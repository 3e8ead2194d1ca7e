#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "sgcweak/spectral_spde.hpp"

using namespace sgcweak;

namespace {

// Semi-discrete deterministic Burgers right-hand side nu D2 u - D(u^2)/2.
Eigen::VectorXd burgers_rhs(const FourierCollocationGrid& g, double nu, const Eigen::VectorXd& u) {
  return nu * (g.D2 * u) - 0.5 * (g.D * u.cwiseProduct(u));
}

Eigen::VectorXd rk4(const FourierCollocationGrid& g, double nu, Eigen::VectorXd u, double T, int n) {
  const double dt = T / n;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd k1 = burgers_rhs(g, nu, u);
    const Eigen::VectorXd k2 = burgers_rhs(g, nu, u + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = burgers_rhs(g, nu, u + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = burgers_rhs(g, nu, u + dt * k3);
    u += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return u;
}

}  // namespace

TEST(FourierDiff, DifferentiatesTrigonometricPolynomials) {
  const auto g = make_collocation_grid(32);
  const Eigen::VectorXd s = g.x.array().sin();
  const Eigen::VectorXd s3 = (3 * g.x.array()).sin();
  EXPECT_LT((g.D * s - Eigen::VectorXd(g.x.array().cos())).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LT((g.D * s3 - Eigen::VectorXd(3 * (3 * g.x.array()).cos())).lpNorm<Eigen::Infinity>(), 1e-11);
  EXPECT_LT((g.D2 * s + s).lpNorm<Eigen::Infinity>(), 1e-11);
  EXPECT_LT(g.D.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g.D + g.D.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FourierDiff, RespectsPeriod) {
  const double l = 3.0;
  const auto g = make_collocation_grid(16, l);
  EXPECT_DOUBLE_EQ(g.x(15), l);
  const Eigen::VectorXd s = (kTwoPi / l * g.x.array()).sin();
  const Eigen::VectorXd ds = kTwoPi / l * (kTwoPi / l * g.x.array()).cos();
  EXPECT_LT((g.D * s - ds).lpNorm<Eigen::Infinity>(), 1e-11);
}

TEST(FourierDiff, RejectsBadSizes) {
  EXPECT_THROW(fourier_diff_matrix(7), InvalidArgument);
  EXPECT_THROW(fourier_diff_matrix(2), InvalidArgument);
  EXPECT_THROW(fourier_diff_matrix(514), InvalidArgument);
  EXPECT_NO_THROW(fourier_diff_matrix(4));
}

TEST(Cutoff, KnownValues) {
  EXPECT_NEAR(gaussian_cutoff(std::exp(-2.0)), 2.0, 1e-14);
  EXPECT_NEAR(gaussian_cutoff(std::exp(-2.0), 2.0), std::sqrt(8.0), 1e-14);
  EXPECT_DOUBLE_EQ(clip_gaussian(5.0, std::exp(-2.0)), 2.0);
  EXPECT_DOUBLE_EQ(clip_gaussian(-5.0, std::exp(-2.0)), -2.0);
  EXPECT_DOUBLE_EQ(clip_gaussian(0.3, std::exp(-2.0)), 0.3);
  EXPECT_THROW(gaussian_cutoff(1.0), InvalidArgument);
  EXPECT_THROW(gaussian_cutoff(0.1, 0.5), InvalidArgument);
}

TEST(ErrorNorms, DiscreteL2AndRelativeErrors) {
  const auto g = make_collocation_grid(8);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(8);
  EXPECT_NEAR(discrete_l2_norm(one), std::sqrt(kTwoPi), 1e-14);
  const FieldErrors e = field_error_norms(one, 2 * one, 1.01 * one, 2 * one + 0.1 * one);
  EXPECT_NEAR(e.rho1_l2, 0.01, 1e-14);
  EXPECT_NEAR(e.rho2_l2, 0.05, 1e-14);
  EXPECT_NEAR(e.rho1_inf, 0.01, 1e-14);
  EXPECT_NEAR(e.rho2_inf, 0.05, 1e-14);
  EXPECT_THROW(field_error_norms(Eigen::VectorXd::Zero(8), one, one, one), InvalidArgument);
  EXPECT_THROW(field_error_norms(one, one, Eigen::VectorXd::Ones(4), one), InvalidArgument);
}

TEST(Burgers, InitialCondition) {
  const auto g = make_collocation_grid(16);
  const Eigen::VectorXd u0 = burgers_initial_condition(g, 1.0, 2.0);
  for (int m = 0; m < 16; ++m) {
    EXPECT_NEAR(u0(m), 2.0 * std::sin(g.x(m)) / (2.0 + std::cos(g.x(m))), 1e-15);
  }
  EXPECT_THROW(burgers_initial_condition(g, 1.0, 1.0), InvalidArgument);
}

TEST(Burgers, HeatStepMatchesFourierFactor) {
  const auto g = make_collocation_grid(32);
  const double nu = 0.7, h = 0.1;
  for (int k : {1, 3, 7}) {
    const Eigen::VectorXd u = (k * g.x.array()).cos();
    const Eigen::VectorXd v = burgers_step(g, u, h, nu, 0.0, 0.0, false);
    const double factor = (1 - nu * h * k * k / 2) / (1 + nu * h * k * k / 2);
    EXPECT_LT((v - factor * u).lpNorm<Eigen::Infinity>(), 1e-12) << k;
  }
}

TEST(Burgers, ForcingEntersLinearly) {
  const auto g = make_collocation_grid(16);
  const double nu = 1.0, h = 0.2, sigma = 0.5;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(16);
  const Eigen::VectorXd v = burgers_step(g, zero, h, nu, sigma, 1.3, false);
  // cos(x) is an eigenfunction of D2 with eigenvalue -1.
  const Eigen::VectorXd expected = sigma * std::sqrt(h) * 1.3 / (1 + nu * h / 2) * g.x.array().cos();
  EXPECT_LT((v - expected).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Burgers, OneStepLocalErrorIsThirdOrder) {
  const auto g = make_collocation_grid(32);
  const double nu = 1.0;
  const Eigen::VectorXd u0 = burgers_initial_condition(g, nu, 2.0);
  double prev = 0.0;
  for (double h : {0.04, 0.02, 0.01}) {
    int it = 0;
    const Eigen::VectorXd v = BurgersStepper(g, nu, 0.0, h).step(u0, 0.0, &it);
    const Eigen::VectorXd ref = rk4(g, nu, u0, h, 200);
    const double err = (v - ref).lpNorm<Eigen::Infinity>();
    EXPECT_LT(it, 50);
    if (prev > 0) {
      EXPECT_GT(prev / err, 6.5) << h;
      EXPECT_LT(prev / err, 9.5) << h;
    }
    prev = err;
  }
}

TEST(Burgers, FixedPointFailureReportsResidual) {
  const auto g = make_collocation_grid(16);
  const Eigen::VectorXd u0 = 50.0 * burgers_initial_condition(g, 1.0, 2.0);
  BurgersStepper stepper(g, 1.0, 0.0, 0.25, true, 3);
  try {
    stepper.step(u0, 0.0);
    FAIL() << "expected FixedPointError";
  } catch (const FixedPointError& e) {
    EXPECT_GT(e.residual(), 0.25 * 0.25 / 100);
  }
}

TEST(Burgers, DeterministicMomentsAndZeroHorizon) {
  BurgersConfig cfg;
  cfg.M = 16;
  cfg.sigma = 0.0;
  const MomentFields f = burgers_moments_sgc(cfg, 2);
  EXPECT_LT((f.second - f.mean.cwiseProduct(f.mean)).lpNorm<Eigen::Infinity>(), 1e-13);

  cfg.sigma = 0.5;
  cfg.T = 0.0;
  const auto g = make_collocation_grid(16);
  const MomentFields z = burgers_moments_sgc(cfg, 2);
  const Eigen::VectorXd u0 = burgers_initial_condition(g, 1.0, 2.0);
  EXPECT_EQ(z.mean, u0);
  EXPECT_EQ(z.second, u0.cwiseProduct(u0));
}

TEST(Burgers, DeterministicSelfConvergenceOrderTwo) {
  BurgersConfig cfg;
  cfg.M = 32;
  cfg.sigma = 0.0;
  cfg.T = 0.8;
  const auto g = make_collocation_grid(32);
  const Eigen::VectorXd ref = rk4(g, cfg.nu, burgers_initial_condition(g, cfg.nu, cfg.a), cfg.T, 800);
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025}) {
    cfg.h = h;
    errs.push_back(discrete_l2_norm(burgers_moments_sgc(cfg, 1).mean - ref));
  }
  EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.2);
  EXPECT_NEAR(std::log2(errs[1] / errs[2]), 2.0, 0.2);
}

TEST(Burgers, StepCountValidation) {
  EXPECT_EQ(step_count(0.5, 0.25), 2);
  EXPECT_EQ(step_count(0.5, 0.0125), 40);
  EXPECT_THROW(step_count(0.5, 0.3), InvalidArgument);
  BurgersConfig cfg;
  cfg.M = 8;
  cfg.h = 0.01;
  EXPECT_THROW(burgers_moments_sgc(cfg, 2), ResourceLimitError);
}

TEST(Burgers, SgcIsWorkerIndependentAndMcCoversIt) {
  BurgersConfig cfg;
  cfg.M = 16;
  // Keep the +-sqrt(3) nodes of level 3 inside the cutoff so both estimators
  // target the same expectation.
  cfg.cutoff_p = 3.0;
  const MomentFields a = burgers_moments_sgc(cfg, 3, 1);
  const MomentFields b = burgers_moments_sgc(cfg, 3, 4);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.second, b.second);
  EXPECT_EQ(a.evaluations, 13);

  const MomentFields m1 = burgers_moments_mc(cfg, 20000, 7, 1);
  const MomentFields m4 = burgers_moments_mc(cfg, 20000, 7, 4);
  EXPECT_EQ(m1.mean, m4.mean);
  EXPECT_EQ(m1.second, m4.second);
  ASSERT_TRUE(m1.mean_ci.has_value());
  // Level 3 is accurate well below the MC noise at this sample size.
  EXPECT_LT(((m1.mean - a.mean).cwiseAbs() - 4 * *m1.mean_ci).maxCoeff(), 0.0);
  EXPECT_LT(((m1.second - a.second).cwiseAbs() - 4 * *m1.second_ci).maxCoeff(), 0.0);
}

TEST(LinearSpde, CosineEigenvalueWithoutAdvection) {
  const double eps = 0.6, h = 0.1;
  const Eigen::MatrixXd P = advdiff_propagator(eps, 0.8, 0.0, 16, h, 0.0);
  const auto g = make_collocation_grid(16);
  const Eigen::VectorXd c = g.x.array().cos();
  const double factor = (1 - eps * eps * h / 4) / (1 + eps * eps * h / 4);
  EXPECT_LT((P * c - factor * c).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(LinearSpde, ConstantsArePreserved) {
  const Eigen::MatrixXd P = advdiff_propagator(0.5, 1.0, 0.3, 16, 0.2, 1.7);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(16);
  EXPECT_LT((P * one - one).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(LinearSpde, NoiseRotatesFourierModes) {
  // With beta = 0, B = sigma D is skew: mode k picks up the Cayley factor of
  // (-eps^2 k^2 h/2 + i k sigma sqrt(h) y) / 2.
  const double eps = 0.5, sigma = 1.0, h = 0.1, y = 0.9;
  const auto g = make_collocation_grid(16);
  const Eigen::MatrixXd P = advdiff_propagator(eps, sigma, 0.0, 16, h, y);
  const int k = 2;
  const std::complex<double> z(-eps * eps * k * k * h / 4, k * sigma * std::sqrt(h) * y / 2);
  const std::complex<double> mult = (1.0 + z) / (1.0 - z);
  const Eigen::VectorXd c = (k * g.x.array()).cos();
  const Eigen::VectorXd s = (k * g.x.array()).sin();
  // e^{ikx} -> mult e^{ikx}: cos -> Re(mult) cos - Im(mult) sin.
  EXPECT_LT((P * c - (mult.real() * c - mult.imag() * s)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(LinearSpde, ShiftInvariantWithoutAdvection) {
  const Eigen::MatrixXd P = advdiff_propagator(0.5, 1.0, 0.0, 12, 0.1, -0.4);
  for (int i = 1; i < 12; ++i) {
    for (int j = 1; j < 12; ++j) EXPECT_NEAR(P(i, j), P(i - 1, j - 1), 1e-13);
  }
}

TEST(LinearSpde, AffinePartFromSources) {
  const auto g = make_collocation_grid(8);
  LinearSpde spde;
  spde.Atilde = Eigen::MatrixXd::Zero(8, 8);
  spde.B = {Eigen::MatrixXd::Zero(8, 8)};
  spde.f = Eigen::VectorXd::Constant(8, 2.0);
  spde.g = {Eigen::VectorXd::Constant(8, 3.0)};
  EXPECT_FALSE(spde.homogeneous());
  const AffineStep st = linear_trapezoidal_step(spde, 0.25, Eigen::VectorXd::Constant(1, 1.0));
  EXPECT_LT((st.P - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((st.s - Eigen::VectorXd::Constant(8, 0.5 + 1.5)).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_THROW(linear_trapezoidal_step(spde, 0.25, Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST(LinearSpde, SingularSystemThrows) {
  LinearSpde spde;
  spde.Atilde = 2.0 * Eigen::MatrixXd::Identity(4, 4);
  spde.B = {Eigen::MatrixXd::Zero(4, 4)};
  EXPECT_TRUE(spde.homogeneous());
  EXPECT_THROW(linear_trapezoidal_step(spde, 1.0, Eigen::VectorXd::Zero(1)), SolverError);
}
