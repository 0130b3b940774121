#pragma once

#include <stdexcept>
#include <string>

namespace mswave {

/// Invalid argument to an operation (bad sizes, indices, parameters).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Point evaluated outside the closure of the domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Incompatible meshes, time grids or dof layouts.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solver failure; carries the last residual when known.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double residual = -1.0, int iterations = -1)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// A computed quantity violates a structural property it must have.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mswave
