#include "sgcweak/spectral_spde.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <numbers>
#include <string>

#include "sgcweak/parallel.hpp"
#include "sgcweak/random.hpp"

namespace sgcweak {

Eigen::MatrixXd fourier_diff_matrix(int M, double period) {
  if (M % 2 != 0) throw InvalidArgument("fourier_diff_matrix: M must be even, got " + std::to_string(M));
  if (M < 4 || M > 512) throw InvalidArgument("fourier_diff_matrix: M must be in [4, 512]");
  if (!(period > 0.0)) throw InvalidArgument("fourier_diff_matrix: period must be positive");
  const double scale = kTwoPi / period;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      if (i == j) continue;
      const int k = i - j;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      D(i, j) = 0.5 * sign / std::tan(k * std::numbers::pi / M) * scale;
    }
  }
  return D;
}

FourierCollocationGrid make_collocation_grid(int M, double period) {
  FourierCollocationGrid grid;
  grid.M = M;
  grid.period = period;
  grid.D = fourier_diff_matrix(M, period);
  grid.D2 = grid.D * grid.D;
  grid.x.resize(M);
  for (int m = 1; m <= M; ++m) grid.x(m - 1) = m * period / M;
  return grid;
}

double gaussian_cutoff(double h, double p) {
  if (!(h > 0.0 && h < 1.0)) throw InvalidArgument("gaussian_cutoff: h must lie in (0, 1)");
  if (!(p >= 1.0)) throw InvalidArgument("gaussian_cutoff: p must be >= 1");
  return std::sqrt(2.0 * p * std::abs(std::log(h)));
}

double clip_gaussian(double xi, double h, double p) {
  const double a = gaussian_cutoff(h, p);
  return std::clamp(xi, -a, a);
}

double discrete_l2_norm(const Eigen::VectorXd& v, double period) {
  return std::sqrt(period / static_cast<double>(v.size()) * v.squaredNorm());
}

FieldErrors field_error_norms(const Eigen::VectorXd& ref_mean, const Eigen::VectorXd& ref_second,
                              const Eigen::VectorXd& est_mean, const Eigen::VectorXd& est_second, double period) {
  if (ref_mean.size() != est_mean.size() || ref_second.size() != est_second.size() ||
      ref_mean.size() != ref_second.size()) {
    throw InvalidArgument("field_error_norms: fields live on different grids");
  }
  const double n1 = discrete_l2_norm(ref_mean, period);
  const double n2 = discrete_l2_norm(ref_second, period);
  const double i1 = ref_mean.lpNorm<Eigen::Infinity>();
  const double i2 = ref_second.lpNorm<Eigen::Infinity>();
  if (n1 == 0.0 || n2 == 0.0) throw InvalidArgument("field_error_norms: reference field has zero norm");
  FieldErrors e;
  e.rho1_l2 = discrete_l2_norm(ref_mean - est_mean, period) / n1;
  e.rho2_l2 = discrete_l2_norm(ref_second - est_second, period) / n2;
  e.rho1_inf = (ref_mean - est_mean).lpNorm<Eigen::Infinity>() / i1;
  e.rho2_inf = (ref_second - est_second).lpNorm<Eigen::Infinity>() / i2;
  return e;
}

Eigen::VectorXd burgers_initial_condition(const FourierCollocationGrid& grid, double nu, double a) {
  if (!(a > 1.0)) throw InvalidArgument("burgers_initial_condition: a must exceed 1");
  const double k = kTwoPi / grid.period;
  return grid.x.unaryExpr([&](double x) { return 2.0 * nu * k * std::sin(k * x) / (a + std::cos(k * x)); });
}

BurgersStepper::BurgersStepper(const FourierCollocationGrid& grid, double nu, double sigma, double h, bool advection,
                               int max_iterations)
    : h_(h), tol_(h * h / 100.0), advection_(advection), max_iterations_(max_iterations) {
  if (!(h > 0.0)) throw InvalidArgument("burgers_step: h must be positive");
  if (!(nu > 0.0)) throw InvalidArgument("burgers_step: nu must be positive");
  const Eigen::Index M = grid.M;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - 0.5 * nu * h * grid.D2);
  linear_ = lu.solve(I + 0.5 * nu * h * grid.D2);
  nonlinear_ = lu.solve(0.5 * h * grid.D);
  forcing_ = lu.solve(Eigen::VectorXd(sigma * std::sqrt(h) * grid.x.array().cos().matrix()));
}

Eigen::VectorXd BurgersStepper::step(const Eigen::VectorXd& u, double y, int* iterations) const {
  const Eigen::VectorXd base = linear_ * u + y * forcing_;
  if (!advection_) {
    if (iterations) *iterations = 0;
    return base;
  }
  Eigen::VectorXd cur = u;
  double change = 0.0;
  for (int it = 1; it <= max_iterations_; ++it) {
    const Eigen::VectorXd mid = 0.5 * (cur + u);
    Eigen::VectorXd next = base - nonlinear_ * mid.cwiseProduct(mid);
    change = (next - cur).lpNorm<Eigen::Infinity>();
    if (!std::isfinite(change)) break;
    cur = std::move(next);
    if (change < tol_) {
      if (iterations) *iterations = it;
      return cur;
    }
  }
  throw FixedPointError("burgers_step: fixed-point iteration did not reach tolerance " + std::to_string(tol_) +
                            " in " + std::to_string(max_iterations_) + " iterations (last change " +
                            std::to_string(change) + ")",
                        change);
}

Eigen::VectorXd burgers_step(const FourierCollocationGrid& grid, const Eigen::VectorXd& u, double h, double nu,
                             double sigma, double y, bool advection) {
  return BurgersStepper(grid, nu, sigma, h, advection).step(u, y);
}

int step_count(double T, double h) {
  if (!(h > 0.0)) throw InvalidArgument("step size must be positive");
  if (!(T >= 0.0)) throw InvalidArgument("final time must be non-negative");
  const double n = T / h;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) {
    throw InvalidArgument("T/h = " + std::to_string(n) + " is not an integer");
  }
  return static_cast<int>(r);
}

namespace {

MomentFields initial_fields(const FourierCollocationGrid& grid, const Eigen::VectorXd& u0) {
  MomentFields out;
  out.x = grid.x;
  out.mean = u0;
  out.second = u0.cwiseProduct(u0);
  return out;
}

}  // namespace

MomentFields burgers_moments_sgc(const BurgersConfig& cfg, int level, int workers, std::size_t node_cap) {
  const auto grid = make_collocation_grid(cfg.M, cfg.period);
  const Eigen::VectorXd u0 = burgers_initial_condition(grid, cfg.nu, cfg.a);
  const int steps = step_count(cfg.T, cfg.h);
  if (steps == 0) return initial_fields(grid, u0);
  if (steps > kMaxCollocationSteps) {
    throw ResourceLimitError("burgers_moments: collocation dimension " + std::to_string(steps) + " exceeds " +
                                 std::to_string(kMaxCollocationSteps),
                             steps);
  }
  const BurgersStepper stepper(grid, cfg.nu, cfg.sigma, cfg.h, cfg.advection, cfg.max_iterations);
  const auto rule = build_sparse_grid(level, steps, GridOptions{node_cap});
  const Eigen::Index M = cfg.M;
  std::vector<int> iterations(static_cast<std::size_t>(rule.size()), 0);

  Eigen::MatrixXd values(2 * M, rule.size());
  parallel_for(static_cast<std::size_t>(rule.size()), workers, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd y(steps);
    for (std::size_t p = begin; p < end; ++p) {
      const auto idx = static_cast<Eigen::Index>(p);
      rule.node(idx, y);
      Eigen::VectorXd u = u0;
      for (int j = 0; j < steps; ++j) {
        int it = 0;
        try {
          u = stepper.step(u, clip_gaussian(y(j), cfg.h, cfg.cutoff_p), &it);
        } catch (const FixedPointError& e) {
          throw FixedPointError(std::string(e.what()) + " at node " + std::to_string(p) + ", step " +
                                    std::to_string(j + 1),
                                e.residual());
        }
        iterations[p] = std::max(iterations[p], it);
      }
      values.col(idx).head(M) = rule.weights()(idx) * u;
      values.col(idx).tail(M) = rule.weights()(idx) * u.cwiseProduct(u);
    }
  });
  const Eigen::VectorXd sum = pairwise_sum_columns(values);

  MomentFields out;
  out.x = grid.x;
  out.mean = sum.head(M);
  out.second = sum.tail(M);
  out.evaluations = rule.size();
  out.max_iterations = *std::max_element(iterations.begin(), iterations.end());
  return out;
}

MomentFields burgers_moments_mc(const BurgersConfig& cfg, long long samples, std::uint64_t seed, int workers) {
  if (samples < 2) throw InvalidArgument("burgers_moments: need at least 2 samples");
  const auto grid = make_collocation_grid(cfg.M, cfg.period);
  const Eigen::VectorXd u0 = burgers_initial_condition(grid, cfg.nu, cfg.a);
  const int steps = step_count(cfg.T, cfg.h);
  if (steps == 0) return initial_fields(grid, u0);
  const BurgersStepper stepper(grid, cfg.nu, cfg.sigma, cfg.h, cfg.advection, cfg.max_iterations);
  const Eigen::Index M = cfg.M;
  constexpr long long kBlock = 256;
  const long long blocks = (samples + kBlock - 1) / kBlock;
  std::vector<MomentAccumulator> acc(static_cast<std::size_t>(blocks), MomentAccumulator(2 * M));
  std::vector<int> block_iterations(static_cast<std::size_t>(blocks), 0);

  parallel_for(static_cast<std::size_t>(blocks), workers, [&](std::size_t b0, std::size_t b1) {
    Eigen::VectorXd row(2 * M);
    for (std::size_t b = b0; b < b1; ++b) {
      const long long first = static_cast<long long>(b) * kBlock;
      const long long last = std::min(samples, first + kBlock);
      for (long long i = first; i < last; ++i) {
        SampleStream stream(seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss;
        Eigen::VectorXd u = u0;
        for (int j = 0; j < steps; ++j) {
          int it = 0;
          u = stepper.step(u, clip_gaussian(gauss(stream), cfg.h, cfg.cutoff_p), &it);
          block_iterations[b] = std::max(block_iterations[b], it);
        }
        row.head(M) = u;
        row.tail(M) = u.cwiseProduct(u);
        acc[b].add(row);
      }
    }
  });
  MomentAccumulator total(2 * M);
  for (const auto& a : acc) total.merge(a);
  const Eigen::VectorXd hw = total.half_width_95();

  MomentFields out;
  out.x = grid.x;
  out.mean = total.mean.head(M);
  out.second = total.mean.tail(M);
  out.mean_ci = hw.head(M);
  out.second_ci = hw.tail(M);
  out.evaluations = total.count;
  out.max_iterations = *std::max_element(block_iterations.begin(), block_iterations.end());
  return out;
}

bool LinearSpde::homogeneous() const {
  if (f.size() > 0 && f.cwiseAbs().maxCoeff() != 0.0) return false;
  for (const auto& gl : g) {
    if (gl.size() > 0 && gl.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

LinearSpde advection_diffusion_spde(const FourierCollocationGrid& grid, double eps, double sigma, double beta) {
  LinearSpde spde;
  // L~ = L - 1/2 M M = eps^2/2 d_xx + beta sin(x) d_x since M M = sigma^2 d_xx.
  spde.Atilde = 0.5 * eps * eps * grid.D2 + beta * grid.x.array().sin().matrix().asDiagonal() * grid.D;
  spde.B = {sigma * grid.D};
  spde.f = Eigen::VectorXd::Zero(grid.M);
  spde.g = {Eigen::VectorXd::Zero(grid.M)};
  return spde;
}

AffineStep linear_trapezoidal_step(const LinearSpde& spde, double h, const Eigen::VectorXd& y) {
  if (!(h > 0.0)) throw InvalidArgument("linear_trapezoidal_step: h must be positive");
  if (y.size() != spde.noises()) throw InvalidArgument("linear_trapezoidal_step: one driving value per noise");
  const Eigen::Index M = spde.Atilde.rows();
  const double sqh = std::sqrt(h);
  Eigen::MatrixXd half = 0.5 * h * spde.Atilde;
  for (int l = 0; l < spde.noises(); ++l) half += (0.5 * sqh * y(l)) * spde.B[l];
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(I - half);
  if (!(lu.rcond() > 1e-14)) {
    throw SolverError("linear_trapezoidal_step: singular system for h = " + std::to_string(h) +
                      ", y[0] = " + std::to_string(y.size() ? y(0) : 0.0));
  }
  AffineStep step;
  step.P = lu.solve(I + half);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(M);
  if (spde.f.size() == M) rhs += h * spde.f;
  for (int l = 0; l < spde.noises(); ++l) {
    if (static_cast<std::size_t>(l) < spde.g.size() && spde.g[l].size() == M) {
      rhs += -0.5 * h * (spde.B[l] * spde.g[l]) + sqh * y(l) * spde.g[l];
    }
  }
  step.s = lu.solve(rhs);
  return step;
}

Eigen::MatrixXd advdiff_propagator(double eps, double sigma, double beta, int M, double h, double y) {
  const auto grid = make_collocation_grid(M);
  return linear_trapezoidal_step(advection_diffusion_spde(grid, eps, sigma, beta), h, Eigen::VectorXd::Constant(1, y)).P;
}

}  // namespace sgcweak
