#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace sgcweak {

/// Pairwise (tree) summation of a contiguous range. The split points depend
/// only on the length, so the result is reproducible for a given input order.
template <typename Scalar>
Scalar pairwise_sum(const Scalar* data, std::size_t n) {
  constexpr std::size_t kLeaf = 8;
  if (n <= kLeaf) {
    Scalar acc(0);
    for (std::size_t i = 0; i < n; ++i) acc += data[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

/// Column-wise pairwise summation: returns sum_j values.col(j).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> pairwise_sum_columns(
    const Eigen::MatrixBase<Derived>& values, Eigen::Index begin, Eigen::Index count) {
  constexpr Eigen::Index kLeaf = 8;
  using Column = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  if (count <= kLeaf) {
    Column acc = Column::Zero(values.rows());
    for (Eigen::Index j = 0; j < count; ++j) acc += values.col(begin + j);
    return acc;
  }
  const Eigen::Index half = count / 2;
  return pairwise_sum_columns(values, begin, half) +
         pairwise_sum_columns(values, begin + half, count - half);
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> pairwise_sum_columns(
    const Eigen::MatrixBase<Derived>& values) {
  return pairwise_sum_columns(values, 0, values.cols());
}

/// Runs fn(begin, end) over a static partition of [0, count) on `workers`
/// threads. The first exception thrown by any worker is rethrown here.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(workers > 0 ? workers : 1, count));
  if (w <= 1) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(w);
  std::vector<std::thread> threads;
  threads.reserve(w);
  const std::size_t chunk = (count + w - 1) / w;
  for (std::size_t t = 0; t < w; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    threads.emplace_back([&, t, begin, end] {
      try {
        if (begin < end) fn(begin, end);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sgcweak
