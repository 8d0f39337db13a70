#pragma once

#include <stdexcept>
#include <string>

namespace dmc {

/// Bad input: violated preconditions, malformed configuration, incompatible
/// problem pieces. The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that was set up correctly but could not finish: solver
/// breakdown, non-finite states, iteration caps, unreachable budgets.
/// The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail
}  // namespace dmc
