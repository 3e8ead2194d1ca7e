#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace sgcweak {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside the documented domain of an operation
/// (bad quadrature order, odd grid size, degenerate model parameters, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quadrature rule would exceed the configured node cap.
class ResourceLimitError : public Error {
 public:
  ResourceLimitError(const std::string& what, double projected)
      : Error(what), projected_(projected) {}
  double projected() const noexcept { return projected_; }

 private:
  double projected_;
};

/// An integrand produced a non-finite value at a quadrature node.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t node)
      : Error(what), node_(node) {}
  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// A time-stepping scheme produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// The implicit fixed-point iteration did not reach its tolerance.
class FixedPointError : public Error {
 public:
  FixedPointError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A linear solve failed (numerically singular system).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Missing model callbacks or an inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgcweak
