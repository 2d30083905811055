#pragma once

#include <stdexcept>
#include <string>

namespace pot {

/// Argument outside the mathematical domain of an operation (e.g. theta
/// outside (0,1), d outside [0, 0.5)).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data cannot support the computation: parse failures, too few
/// exceedances, degenerate samples.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure failed or a statistic is undefined at the
/// supplied point (zero variance, non-convergence, boundary estimate).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pot
