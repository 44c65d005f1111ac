#pragma once

#include <stdexcept>
#include <string>

namespace gsm {

// User/domain errors: bad arguments, invalid data, violated preconditions.
// The CLI maps these to exit code 1.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numeric failures: non-convergence, singular systems, divergent integrals.
// The CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gsm
