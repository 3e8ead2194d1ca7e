#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgcweak/errors.hpp"
#include "sgcweak/sparse_grid.hpp"

namespace sgcweak {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Periodic spectral differentiation matrix on x_m = m l / M, m = 1..M (M even).
Eigen::MatrixXd fourier_diff_matrix(int M, double period = kTwoPi);

struct FourierCollocationGrid {
  int M = 0;
  double period = kTwoPi;
  Eigen::VectorXd x;   // x_m = m * period / M
  Eigen::MatrixXd D;
  Eigen::MatrixXd D2;  // D * D
};

FourierCollocationGrid make_collocation_grid(int M, double period = kTwoPi);

/// sqrt(2 p |ln h|)
double gaussian_cutoff(double h, double p = 1.0);

/// Clamp xi to [-A_h, A_h].
double clip_gaussian(double xi, double h, double p = 1.0);

/// ((period / M) sum v_m^2)^(1/2)
double discrete_l2_norm(const Eigen::VectorXd& v, double period = kTwoPi);

struct FieldErrors {
  double rho1_l2 = 0.0;
  double rho2_l2 = 0.0;
  double rho1_inf = 0.0;
  double rho2_inf = 0.0;
};

/// Relative discrete-L2 and max-norm errors of the first two moment fields.
FieldErrors field_error_norms(const Eigen::VectorXd& ref_mean, const Eigen::VectorXd& ref_second,
                              const Eigen::VectorXd& est_mean, const Eigen::VectorXd& est_second,
                              double period = kTwoPi);

// ---------------------------------------------------------------------------
// Stochastic Burgers equation du + u u_x dt = nu u_xx dt + sigma cos(x) dw.

struct BurgersConfig {
  double nu = 1.0;
  double sigma = 0.5;
  double T = 0.5;
  double h = 0.25;
  int M = 100;
  double period = kTwoPi;
  double a = 2.0;             // initial condition parameter, a > 1
  bool advection = true;      // false drops the nonlinear term
  int max_iterations = 200;
  double cutoff_p = 1.0;
};

/// u0(x) = 2 nu (2pi/l) sin(2pi x/l) / (a + cos(2pi x/l)) on the grid.
Eigen::VectorXd burgers_initial_condition(const FourierCollocationGrid& grid, double nu, double a);

/**
 * One trapezoidal step. Diffusion is treated implicitly by a direct solve;
 * the nonlinear term is resolved by fixed-point iteration started from the
 * previous state, stopping when successive iterates differ by less than
 * h^2/100 in max norm.
 */
class BurgersStepper {
 public:
  BurgersStepper(const FourierCollocationGrid& grid, double nu, double sigma, double h, bool advection = true,
                 int max_iterations = 200);

  /// Advances u by one step with driving value y (used as given, no clipping).
  Eigen::VectorXd step(const Eigen::VectorXd& u, double y, int* iterations = nullptr) const;

  double h() const { return h_; }

 private:
  double h_;
  double tol_;
  bool advection_;
  int max_iterations_;
  Eigen::MatrixXd linear_;     // A^{-1} (I + nu h/2 D^2)
  Eigen::MatrixXd nonlinear_;  // (h/2) A^{-1} D
  Eigen::VectorXd forcing_;    // A^{-1} sigma Gamma sqrt(h)
};

Eigen::VectorXd burgers_step(const FourierCollocationGrid& grid, const Eigen::VectorXd& u, double h, double nu,
                             double sigma, double y, bool advection = true);

struct MomentFields {
  Eigen::VectorXd x;
  Eigen::VectorXd mean;
  Eigen::VectorXd second;
  std::optional<Eigen::VectorXd> mean_ci;    // MC only: 95% half-widths
  std::optional<Eigen::VectorXd> second_ci;
  long long evaluations = 0;                 // quadrature nodes or samples
  int max_iterations = 0;                    // largest fixed-point count seen
};

inline constexpr int kMaxCollocationSteps = 40;

/// Collocation over A(L, N), N = T/h <= 40; node coordinates are clipped.
MomentFields burgers_moments_sgc(const BurgersConfig& cfg, int level, int workers = 1,
                                 std::size_t node_cap = kDefaultNodeCap);

/// Monte Carlo with clipped standard normal draws from per-sample streams.
MomentFields burgers_moments_mc(const BurgersConfig& cfg, long long samples, std::uint64_t seed, int workers = 1);

/// Number of steps T/h; throws if it is not an integer.
int step_count(double T, double h);

// ---------------------------------------------------------------------------
// Linear SPDE du = (L~ u + f) dt + sum_l (M_l u + g_l) dw_l on the collocation
// grid, with L~ = L - 1/2 sum_l M_l M_l already formed.

struct LinearSpde {
  Eigen::MatrixXd Atilde;
  std::vector<Eigen::MatrixXd> B;
  Eigen::VectorXd f;
  std::vector<Eigen::VectorXd> g;

  int noises() const { return static_cast<int>(B.size()); }
  bool homogeneous() const;
};

/// du = ((eps^2 + sigma^2)/2 u_xx + beta sin(x) u_x) dt + sigma u_x dw.
LinearSpde advection_diffusion_spde(const FourierCollocationGrid& grid, double eps, double sigma, double beta);

/**
 * One trapezoidal step u -> P u + s for driving values y (one per noise):
 * P = (I - h/2 A~ - sum sqrt(h) y_l/2 B_l)^{-1} (I + h/2 A~ + sum sqrt(h) y_l/2 B_l),
 * s = that inverse applied to h (f - 1/2 sum B_l g_l) + sum g_l sqrt(h) y_l.
 */
struct AffineStep {
  Eigen::MatrixXd P;
  Eigen::VectorXd s;
};

AffineStep linear_trapezoidal_step(const LinearSpde& spde, double h, const Eigen::VectorXd& y);

/// Homogeneous propagator of the advection-diffusion step for one noise value.
Eigen::MatrixXd advdiff_propagator(double eps, double sigma, double beta, int M, double h, double y);

}  // namespace sgcweak
