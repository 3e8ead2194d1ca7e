#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace sgcweak {

/**
 * Counter-based stream: the state is derived from (seed, index) alone, so
 * sample i draws the same numbers no matter which thread evaluates it.
 * Satisfies UniformRandomBitGenerator (splitmix64 output function), so it
 * feeds std::normal_distribution directly.
 */
class SampleStream {
 public:
  using result_type = std::uint64_t;

  SampleStream(std::uint64_t seed, std::uint64_t index) : state_(mix(seed ^ mix(index + 0x632BE59BD9B4E019ull))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  /// +1 or -1 with probability 1/2.
  double sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Running mean and sum of squared deviations, mergeable (Chan et al.).
struct MomentAccumulator {
  long long count = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  explicit MomentAccumulator(Eigen::Index width = 0)
      : mean(Eigen::VectorXd::Zero(width)), m2(Eigen::VectorXd::Zero(width)) {}

  void add(const Eigen::VectorXd& x) {
    ++count;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta.cwiseProduct(x - mean);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    const Eigen::VectorXd delta = other.mean - mean;
    mean += delta * (nb / n);
    m2 += other.m2 + delta.cwiseProduct(delta) * (na * nb / n);
    count += other.count;
  }

  Eigen::VectorXd sample_variance() const {
    if (count < 2) return Eigen::VectorXd::Zero(mean.size());
    return (m2 / static_cast<double>(count - 1)).cwiseMax(0.0);
  }

  /// 1.96 * std / sqrt(count)
  Eigen::VectorXd half_width_95() const {
    return 1.96 * (sample_variance() / static_cast<double>(std::max<long long>(count, 1))).cwiseSqrt();
  }
};

}  // namespace sgcweak
