#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace evscale {

/// Input outside the mathematical domain of an operation (nonpositive data
/// for Box-Cox, probabilities outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed call: empty data, data below a threshold, missing pipeline input.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (bracketing, convergence, zero acceptance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << args);
  return os.str();
}

}  // namespace detail
}  // namespace evscale
