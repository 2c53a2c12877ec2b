#pragma once

#include <stdexcept>
#include <string>

namespace wgl {

// Bad input: malformed data, violated preconditions, coverage failures.
// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Argument outside the mathematical domain of an operation (p < 1, r <= 0, ...).
class DomainError : public ValidationError {
 public:
  explicit DomainError(const std::string& what) : ValidationError(what) {}
};

// Numerical breakdown: quadrature non-convergence, ill-conditioning, failed
// self-checks. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace wgl
