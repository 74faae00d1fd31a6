#ifndef PERP_ERROR_HPP
#define PERP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace perp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration or parameters (bad family parameters, malformed
/// config text, precondition violations the caller could have checked).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure at runtime (quadrature non-convergence, overflow
/// in an intermediate quantity, table refinement not reaching tolerance).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Operation not supported for the given distribution family.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Statistical estimation could not produce a usable result
/// (no exceedances, conditioning event too rare within the budget).
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Root finder could not bracket or converge.
class RootFindError : public Error {
 public:
  using Error::Error;
};

}  // namespace perp

#endif  // PERP_ERROR_HPP
