#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace metriplex {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a computation produces values that cannot be trusted
/// (blow-up, degenerate quadrature, non-integrable weights).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed inputs and configuration problems.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace metriplex
