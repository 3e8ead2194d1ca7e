#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sgcweak/errors.hpp"
#include "sgcweak/parallel.hpp"
#include "sgcweak/random.hpp"
#include "sgcweak/sde_schemes.hpp"
#include "sgcweak/sparse_grid.hpp"

namespace sgcweak {

template <typename Scalar = double>
using Payoff = std::function<Scalar(const Vector<Scalar>&)>;

/// E f(X_N) for a scheme endpoint map and payoff f.
template <typename Scalar = double>
struct WeakTarget {
  SchemeEndpointMap<Scalar> map;
  Payoff<Scalar> payoff;
};

struct WeakOptions {
  std::size_t node_cap = kDefaultNodeCap;
  int workers = 1;
};

/// Sample mean and 95% confidence half-width per payoff.
struct McEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd half_width;
  long long samples = 0;
};

inline constexpr long long kMcBlockSize = 1024;

/**
 * Integrates payoffs of the endpoint over `xi_rule` on the xi axes. Zeta
 * axes (second-order scheme, r > 1) are summed exactly over their +-1 law.
 */
template <typename Scalar>
Vector<Scalar> integrate_endpoint(const SchemeEndpointMap<Scalar>& map, const SparseGridRule<Scalar>& xi_rule,
                                  const std::vector<Payoff<Scalar>>& payoffs, const WeakOptions& opts = {}) {
  const int dxi = map.xi_dimension();
  const int dzeta = map.zeta_dimension();
  if (xi_rule.dimension() != std::max(dxi, 1)) {
    throw InvalidArgument("integrate_endpoint: rule dimension does not match the scheme");
  }
  if (dzeta > 0) {
    detail::check_cap(static_cast<double>(xi_rule.size()) * std::ldexp(1.0, dzeta), opts.node_cap, "integrate_endpoint");
  }
  const auto width = static_cast<Eigen::Index>(payoffs.size());
  const IntegrationOptions integ{opts.workers};

  auto over_xi = [&](const Vector<Scalar>& zeta) {
    return sg_integrate_many(
        xi_rule, width,
        [&](const Vector<Scalar>& y, Vector<Scalar>& out) {
          Vector<Scalar> drive(map.driving_dimension());
          drive.head(dxi) = y.head(dxi);
          drive.tail(dzeta) = zeta;
          const Vector<Scalar> x = map(drive);
          for (Eigen::Index k = 0; k < width; ++k) out(k) = payoffs[k](x);
        },
        integ);
  };

  if (dzeta == 0) return over_xi(Vector<Scalar>());
  const std::uint64_t patterns = std::uint64_t{1} << dzeta;
  Matrix<Scalar> partial(width, static_cast<Eigen::Index>(patterns));
  Vector<Scalar> zeta(dzeta);
  for (std::uint64_t s = 0; s < patterns; ++s) {
    for (int k = 0; k < dzeta; ++k) zeta(k) = ((s >> (dzeta - 1 - k)) & 1u) ? Scalar(1) : Scalar(-1);
    partial.col(static_cast<Eigen::Index>(s)) = over_xi(zeta);
  }
  return pairwise_sum_columns(partial) / static_cast<Scalar>(patterns);
}

/// Smolyak collocation A(L, d) over the xi axes of the scheme.
template <typename Scalar>
Vector<Scalar> weak_expectations_sgc(const SchemeEndpointMap<Scalar>& map, const std::vector<Payoff<Scalar>>& payoffs,
                                     int level, const WeakOptions& opts = {}) {
  const int d = std::max(map.xi_dimension(), 1);
  const auto rule = build_sparse_grid<Scalar>(level, d, GridOptions{opts.node_cap});
  return integrate_endpoint(map, rule, payoffs, opts);
}

template <typename Scalar>
Scalar weak_expectation_sgc(const WeakTarget<Scalar>& target, int level, const WeakOptions& opts = {}) {
  return weak_expectations_sgc(target.map, {target.payoff}, level, opts)(0);
}

/// Full n-point tensor rule over the xi axes; n = 2 is the weak Euler scheme.
template <typename Scalar>
Vector<Scalar> weak_expectations_tensor(const SchemeEndpointMap<Scalar>& map,
                                        const std::vector<Payoff<Scalar>>& payoffs, int n,
                                        const WeakOptions& opts = {}) {
  const int d = std::max(map.xi_dimension(), 1);
  const auto rule = tensor_rule<Scalar>(n, d, GridOptions{opts.node_cap});
  return integrate_endpoint(map, rule, payoffs, opts);
}

template <typename Scalar>
Scalar weak_expectation_tensor(const WeakTarget<Scalar>& target, int n, const WeakOptions& opts = {}) {
  return weak_expectations_tensor(target.map, {target.payoff}, n, opts)(0);
}

/**
 * Monte Carlo with Gaussian xi and +-1 zeta. Sample i uses the stream
 * (seed, i); samples are reduced in fixed blocks of kMcBlockSize, merged in
 * block order, so the result does not depend on the worker count.
 */
template <typename Scalar>
McEstimate weak_expectations_mc(const SchemeEndpointMap<Scalar>& map, const std::vector<Payoff<Scalar>>& payoffs,
                                long long samples, std::uint64_t seed, const WeakOptions& opts = {}) {
  if (samples < 2) throw InvalidArgument("weak_expectation_mc: need at least 2 samples");
  const auto width = static_cast<Eigen::Index>(payoffs.size());
  const int dxi = map.xi_dimension();
  const int dzeta = map.zeta_dimension();
  const long long blocks = (samples + kMcBlockSize - 1) / kMcBlockSize;
  std::vector<MomentAccumulator> acc(static_cast<std::size_t>(blocks), MomentAccumulator(width));
  parallel_for(static_cast<std::size_t>(blocks), opts.workers, [&](std::size_t b0, std::size_t b1) {
    Vector<Scalar> drive(map.driving_dimension());
    Eigen::VectorXd values(width);
    for (std::size_t b = b0; b < b1; ++b) {
      const long long first = static_cast<long long>(b) * kMcBlockSize;
      const long long last = std::min(samples, first + kMcBlockSize);
      for (long long i = first; i < last; ++i) {
        SampleStream stream(seed, static_cast<std::uint64_t>(i));
        std::normal_distribution<double> gauss;
        for (int k = 0; k < dxi; ++k) drive(k) = static_cast<Scalar>(gauss(stream));
        for (int k = 0; k < dzeta; ++k) drive(dxi + k) = static_cast<Scalar>(stream.sign());
        const Vector<Scalar> x = map(drive);
        for (Eigen::Index k = 0; k < width; ++k) values(k) = static_cast<double>(payoffs[k](x));
        acc[b].add(values);
      }
    }
  });
  MomentAccumulator total(width);
  for (const auto& a : acc) total.merge(a);
  return {total.mean, total.half_width_95(), total.count};
}

template <typename Scalar>
std::pair<double, double> weak_expectation_mc(const WeakTarget<Scalar>& target, long long samples, std::uint64_t seed,
                                              const WeakOptions& opts = {}) {
  const auto est = weak_expectations_mc(target.map, {target.payoff}, samples, seed, opts);
  return {est.mean(0), est.half_width(0)};
}

/**
 * Closed-form gap between the weak Euler expectation and its level-2
 * collocation for f = x^4 on dX = lambda X dt + eps dw, X(0) = 1, as
 * (6/35) eps^4 times the two-branch expression in lambda.
 */
inline double sgc_defect_x4(double lambda, double eps, double h, int steps) {
  if (!(h > 0.0)) throw InvalidArgument("sgc_defect_x4: step must be positive");
  const double e4 = std::pow(eps, 4) * 6.0 / 35.0;
  if (lambda == 0.0) {
    const double T = steps * h;
    return e4 * (T * T / 2.0 - T * h / 2.0);
  }
  const double q = 1.0 + lambda * h;
  if (q == 0.0) throw InvalidArgument("sgc_defect_x4: 1 + lambda h = 0 is singular");
  const double q2n = std::pow(q, 2 * steps);
  return e4 * (q2n - 1.0) / (lambda * lambda * (2.0 + lambda * h) * (2.0 + lambda * h)) *
         ((q2n + 1.0) / (1.0 + q * q) - 1.0);
}

/// |exact - est| / |exact| for the first two moments.
inline std::pair<double, double> moment_relative_errors(double exact1, double exact2, double est1, double est2) {
  if (exact1 == 0.0 || exact2 == 0.0) throw InvalidArgument("moment_relative_errors: zero reference value");
  return {std::abs(exact1 - est1) / std::abs(exact1), std::abs(exact2 - est2) / std::abs(exact2)};
}

}  // namespace sgcweak
