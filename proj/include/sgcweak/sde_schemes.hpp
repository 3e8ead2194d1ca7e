#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgcweak/errors.hpp"
#include "sgcweak/hermite_quadrature.hpp"

namespace sgcweak {

/**
 * Ito system dX = a(t,X) dt + sum_l sigma_l(t,X) dw_l with X in R^m and r
 * independent Wiener processes.
 *
 * Derivative callbacks are optional. A missing one is replaced by central
 * finite differences with step 1e-5 * max(1, |x|) unless
 * allow_finite_differences is false.
 */
template <typename Scalar = double>
struct SdeModel {
  using State = Vector<Scalar>;
  using Jacobian = Matrix<Scalar>;

  int m = 1;
  int r = 1;

  std::function<State(Scalar, const State&)> drift;
  // Column l of the diffusion matrix, l = 0..r-1.
  std::function<State(Scalar, const State&, int)> diffusion;

  std::function<Jacobian(Scalar, const State&)> drift_dx;
  std::function<Jacobian(Scalar, const State&, int)> diffusion_dx;
  std::function<State(Scalar, const State&)> drift_dt;
  std::function<State(Scalar, const State&, int)> diffusion_dt;
  // Second derivative as a bilinear map: (t, x, u, v) -> sum_ij d2f/dx_i dx_j u_i v_j.
  std::function<State(Scalar, const State&, const State&, const State&)> drift_dxx;
  std::function<State(Scalar, const State&, int, const State&, const State&)> diffusion_dxx;

  bool allow_finite_differences = true;

  std::string name = "custom";
};

/// dX = lambda X dt + eps dw, scalar.
template <typename Scalar = double>
SdeModel<Scalar> linear_model(Scalar lambda, Scalar eps) {
  using State = Vector<Scalar>;
  using Jacobian = Matrix<Scalar>;
  SdeModel<Scalar> model;
  model.name = "linear";
  model.drift = [lambda](Scalar, const State& x) -> State { return lambda * x; };
  model.diffusion = [eps](Scalar, const State&, int) -> State { return State::Constant(1, eps); };
  model.drift_dx = [lambda](Scalar, const State&) -> Jacobian { return Jacobian::Constant(1, 1, lambda); };
  model.diffusion_dx = [](Scalar, const State&, int) -> Jacobian { return Jacobian::Zero(1, 1); };
  model.drift_dt = [](Scalar, const State&) -> State { return State::Zero(1); };
  model.diffusion_dt = [](Scalar, const State&, int) -> State { return State::Zero(1); };
  model.drift_dxx = [](Scalar, const State&, const State&, const State&) -> State { return State::Zero(1); };
  model.diffusion_dxx = [](Scalar, const State&, int, const State&, const State&) -> State { return State::Zero(1); };
  return model;
}

/// Modified Cox-Ingersoll-Ross: dX = -theta1 X dt + theta2 sqrt(1 + X^2) dw.
template <typename Scalar = double>
SdeModel<Scalar> mcir_model(Scalar theta1, Scalar theta2) {
  using State = Vector<Scalar>;
  using Jacobian = Matrix<Scalar>;
  using std::sqrt;
  SdeModel<Scalar> model;
  model.name = "mcir";
  model.drift = [theta1](Scalar, const State& x) -> State { return -theta1 * x; };
  model.diffusion = [theta2](Scalar, const State& x, int) -> State {
    return State::Constant(1, theta2 * sqrt(Scalar(1) + x(0) * x(0)));
  };
  model.drift_dx = [theta1](Scalar, const State&) -> Jacobian { return Jacobian::Constant(1, 1, -theta1); };
  model.diffusion_dx = [theta2](Scalar, const State& x, int) -> Jacobian {
    return Jacobian::Constant(1, 1, theta2 * x(0) / sqrt(Scalar(1) + x(0) * x(0)));
  };
  model.drift_dt = [](Scalar, const State&) -> State { return State::Zero(1); };
  model.diffusion_dt = [](Scalar, const State&, int) -> State { return State::Zero(1); };
  model.drift_dxx = [](Scalar, const State&, const State&, const State&) -> State { return State::Zero(1); };
  model.diffusion_dxx = [theta2](Scalar, const State& x, int, const State& u, const State& v) -> State {
    const Scalar s = Scalar(1) + x(0) * x(0);
    return State::Constant(1, theta2 / (s * sqrt(s)) * u(0) * v(0));
  };
  return model;
}

namespace detail {

template <typename Scalar>
Scalar fd_step(Scalar x) {
  using std::abs;
  return Scalar(1e-5) * std::max(Scalar(1), abs(x));
}

// Derivatives of one vector field g(t, x), analytic when available.
template <typename Scalar>
class FieldDerivatives {
 public:
  using State = Vector<Scalar>;
  using Jacobian = Matrix<Scalar>;
  using Field = std::function<State(Scalar, const State&)>;

  FieldDerivatives(Field g, std::function<Jacobian(Scalar, const State&)> dx, std::function<State(Scalar, const State&)> dt,
                   std::function<State(Scalar, const State&, const State&, const State&)> dxx, bool allow_fd,
                   const std::string& what)
      : g_(std::move(g)), dx_(std::move(dx)), dt_(std::move(dt)), dxx_(std::move(dxx)) {
    if (!allow_fd && (!dx_ || !dt_ || !dxx_)) {
      throw ConfigError(what + ": analytic derivatives missing and finite differences disabled");
    }
  }

  /// (dg/dx) u
  State directional(Scalar t, const State& x, const State& u) const {
    if (dx_) return dx_(t, x) * u;
    Jacobian j(x.size(), x.size());
    State xp = x, xm = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const Scalar step = fd_step(x(k));
      xp(k) = x(k) + step;
      xm(k) = x(k) - step;
      j.col(k) = (g_(t, xp) - g_(t, xm)) / (Scalar(2) * step);
      xp(k) = x(k);
      xm(k) = x(k);
    }
    return j * u;
  }

  State time(Scalar t, const State& x) const {
    if (dt_) return dt_(t, x);
    const Scalar step = fd_step(t);
    return (g_(t + step, x) - g_(t - step, x)) / (Scalar(2) * step);
  }

  /// sum_ij d2g/dx_i dx_j u_i u_j
  State second(Scalar t, const State& x, const State& u) const {
    if (dxx_) return dxx_(t, x, u, u);
    const Scalar norm = u.norm();
    if (norm == Scalar(0)) return State::Zero(g_(t, x).size());
    const State dir = u / norm;
    const Scalar step = fd_step(x.template lpNorm<Eigen::Infinity>());
    const State mid = g_(t, x);
    return norm * norm * (g_(t, x + step * dir) - Scalar(2) * mid + g_(t, x - step * dir)) / (step * step);
  }

 private:
  Field g_;
  std::function<Jacobian(Scalar, const State&)> dx_;
  std::function<State(Scalar, const State&)> dt_;
  std::function<State(Scalar, const State&, const State&, const State&)> dxx_;
};

}  // namespace detail

enum class SchemeKind { euler, second_order };

/**
 * Deterministic map from driving variables to the scheme endpoint X_N.
 *
 * Layout is step-major, noise-minor: y[k*r + l] drives noise l at step k+1.
 * For the second-order scheme with r > 1 the vector holds the xi block
 * (r*N entries) followed by the zeta block (r*N entries).
 */
template <typename Scalar = double>
class SchemeEndpointMap {
 public:
  using State = Vector<Scalar>;

  SchemeEndpointMap(SdeModel<Scalar> model, State x0, Scalar h, int steps, SchemeKind kind, Scalar t0 = Scalar(0))
      : model_(std::move(model)), x0_(std::move(x0)), t0_(t0), h_(h), steps_(steps), kind_(kind) {
    if (!(h_ > Scalar(0))) throw InvalidArgument("SchemeEndpointMap: step must be positive");
    if (steps_ < 0) throw InvalidArgument("SchemeEndpointMap: negative step count");
    if (x0_.size() != model_.m) throw InvalidArgument("SchemeEndpointMap: initial state has wrong dimension");
    if (!model_.drift || !model_.diffusion) throw ConfigError("SchemeEndpointMap: model lacks drift or diffusion");
    if (kind_ == SchemeKind::second_order) build_derivatives();
  }

  const SdeModel<Scalar>& model() const { return model_; }
  const State& initial_state() const { return x0_; }
  Scalar step() const { return h_; }
  int steps() const { return steps_; }
  Scalar t0() const { return t0_; }
  SchemeKind kind() const { return kind_; }

  int xi_dimension() const { return model_.r * steps_; }
  int zeta_dimension() const {
    return (kind_ == SchemeKind::second_order && model_.r > 1) ? model_.r * steps_ : 0;
  }
  int driving_dimension() const { return xi_dimension() + zeta_dimension(); }

  /// Endpoint for the flat driving vector (xi block, then zeta block if any).
  State operator()(const State& y) const {
    if (y.size() != driving_dimension()) {
      throw InvalidArgument("SchemeEndpointMap: driving vector has length " + std::to_string(y.size()) +
                            ", expected " + std::to_string(driving_dimension()));
    }
    if (kind_ == SchemeKind::euler) return euler(y);
    return second_order(y.head(xi_dimension()), y.tail(zeta_dimension()));
  }

  State euler(const Eigen::Ref<const State>& y) const {
    using std::sqrt;
    const int r = model_.r;
    const Scalar sqh = sqrt(h_);
    State x = x0_;
    for (int k = 0; k < steps_; ++k) {
      const Scalar t = t0_ + Scalar(k) * h_;
      State next = x + model_.drift(t, x) * h_;
      for (int l = 0; l < r; ++l) next += model_.diffusion(t, x, l) * (sqh * y(k * r + l));
      if (!next.allFinite()) {
        throw DivergenceError("euler_endpoint: non-finite state at step " + std::to_string(k + 1), k + 1);
      }
      x = std::move(next);
    }
    return x;
  }

  State second_order(const Eigen::Ref<const State>& xi, const Eigen::Ref<const State>& zeta) const {
    using std::sqrt;
    const int r = model_.r;
    const Scalar sqh = sqrt(h_);
    const Scalar h32 = h_ * sqh;
    std::vector<State> sig(r);
    State x = x0_;
    for (int k = 0; k < steps_; ++k) {
      const Scalar t = t0_ + Scalar(k) * h_;
      const State a = model_.drift(t, x);
      for (int l = 0; l < r; ++l) sig[l] = model_.diffusion(t, x, l);

      State next = x + a * h_ + (h_ * h_ / Scalar(2)) * generator(*drift_d_, t, x, a, sig);
      for (int i = 0; i < r; ++i) {
        const Scalar xi_i = xi(k * r + i);
        // Lambda_i a + L sigma_i
        const State mixed = drift_d_->directional(t, x, sig[i]) + generator(diffusion_d_[i], t, x, a, sig);
        next += sig[i] * (sqh * xi_i) + (h32 / Scalar(2)) * xi_i * mixed;
        for (int j = 0; j < r; ++j) {
          const Scalar eta = iterated(xi, zeta, k, i, j);
          if (eta == Scalar(0)) continue;
          next += (h_ * eta) * diffusion_d_[j].directional(t, x, sig[i]);
        }
      }
      if (!next.allFinite()) {
        throw DivergenceError("second_order_endpoint: non-finite state at step " + std::to_string(k + 1), k + 1);
      }
      x = std::move(next);
    }
    return x;
  }

 private:
  void build_derivatives() {
    const bool fd = model_.allow_finite_differences;
    const auto& m = model_;
    drift_d_.emplace(m.drift, m.drift_dx, m.drift_dt, m.drift_dxx, fd, "second_order_endpoint (drift)");
    diffusion_d_.clear();
    for (int l = 0; l < m.r; ++l) {
      auto g = [f = m.diffusion, l](Scalar t, const State& x) { return f(t, x, l); };
      std::function<Matrix<Scalar>(Scalar, const State&)> dx;
      if (m.diffusion_dx) dx = [f = m.diffusion_dx, l](Scalar t, const State& x) { return f(t, x, l); };
      std::function<State(Scalar, const State&)> dt;
      if (m.diffusion_dt) dt = [f = m.diffusion_dt, l](Scalar t, const State& x) { return f(t, x, l); };
      std::function<State(Scalar, const State&, const State&, const State&)> dxx;
      if (m.diffusion_dxx) {
        dxx = [f = m.diffusion_dxx, l](Scalar t, const State& x, const State& u, const State& v) { return f(t, x, l, u, v); };
      }
      diffusion_d_.emplace_back(g, dx, dt, dxx, fd, "second_order_endpoint (diffusion " + std::to_string(l) + ")");
    }
  }

  // L g = dg/dt + (dg/dx) a + 1/2 sum_l d2g[sigma_l, sigma_l]
  static State generator(const detail::FieldDerivatives<Scalar>& g, Scalar t, const State& x, const State& a,
                         const std::vector<State>& sig) {
    State out = g.time(t, x) + g.directional(t, x, a);
    for (const auto& s : sig) out += g.second(t, x, s) / Scalar(2);
    return out;
  }

  // eta_ij = xi_i xi_j / 2 - gamma_ij zeta_i zeta_j / 2, gamma_ij = -1 for i < j, else 1.
  Scalar iterated(const Eigen::Ref<const State>& xi, const Eigen::Ref<const State>& zeta, int k, int i, int j) const {
    const int r = model_.r;
    const Scalar xi_i = xi(k * r + i);
    const Scalar xi_j = xi(k * r + j);
    if (r == 1) return (xi_i * xi_i - Scalar(1)) / Scalar(2);
    const Scalar gamma = i < j ? Scalar(-1) : Scalar(1);
    return xi_i * xi_j / Scalar(2) - gamma * zeta(k * r + i) * zeta(k * r + j) / Scalar(2);
  }

  SdeModel<Scalar> model_;
  State x0_;
  Scalar t0_;
  Scalar h_;
  int steps_;
  SchemeKind kind_;
  std::optional<detail::FieldDerivatives<Scalar>> drift_d_;
  std::vector<detail::FieldDerivatives<Scalar>> diffusion_d_;
};

template <typename Scalar>
Vector<Scalar> euler_endpoint(const SchemeEndpointMap<Scalar>& map, const std::type_identity_t<Vector<Scalar>>& y) {
  if (y.size() != map.xi_dimension()) throw InvalidArgument("euler_endpoint: driving vector must have length r*N");
  return map.euler(y);
}

template <typename Scalar>
Vector<Scalar> second_order_endpoint(const SchemeEndpointMap<Scalar>& map,
                                     const std::type_identity_t<Vector<Scalar>>& y_xi,
                                     const std::type_identity_t<Vector<Scalar>>& y_zeta = {}) {
  if (map.kind() != SchemeKind::second_order) {
    throw InvalidArgument("second_order_endpoint: map was built for the Euler scheme");
  }
  if (y_xi.size() != map.xi_dimension() || y_zeta.size() != map.zeta_dimension()) {
    throw InvalidArgument("second_order_endpoint: driving vectors have wrong length");
  }
  return map.second_order(y_xi, y_zeta);
}

/// First and second moments of the exact mCIR solution.
inline std::pair<double, double> mcir_exact_moments(double x0, double theta1, double theta2, double t) {
  const double k = theta2 * theta2 - 2.0 * theta1;
  if (k == 0.0) throw InvalidArgument("mcir_exact_moments: theta2^2 = 2 theta1 is degenerate");
  const double s = theta2 * theta2 / k;
  return {x0 * std::exp(-theta1 * t), -s + (x0 * x0 + s) * std::exp(k * t)};
}

/// E X_N^p, p <= 4, of the Euler endpoint for the linear model with x0 = 1.
inline double linear_euler_moment_oracle(double lambda, double eps, double h, int steps, int p) {
  const double q = 1.0 + lambda * h;
  const double mu = std::pow(q, steps);
  double var = 0.0;
  for (int j = 1; j <= steps; ++j) var += std::pow(q, 2 * (steps - j));
  var *= eps * eps * h;
  switch (p) {
    case 1: return mu;
    case 2: return mu * mu + var;
    case 3: return mu * mu * mu + 3.0 * mu * var;
    case 4: return mu * mu * mu * mu + 6.0 * mu * mu * var + 3.0 * var * var;
    default: throw InvalidArgument("linear_euler_moment_oracle: p must be in {1,2,3,4}");
  }
}

}  // namespace sgcweak
