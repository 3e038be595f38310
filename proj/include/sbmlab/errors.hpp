#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sbmlab {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Result (or an intermediate) exceeds the representable floating-point range.
// Carries the last abscissa/value pair that was still representable.
class RangeError : public Error {
 public:
  RangeError(const std::string& msg, double last_abscissa, double last_value)
      : Error(msg), last_abscissa(last_abscissa), last_value(last_value) {}
  double last_abscissa;
  double last_value;
};

// An iterative or adaptive computation failed to reach the requested
// tolerance; carries the best estimate obtained and its error estimate.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double achieved_estimate,
                   double achieved_error)
      : Error(msg),
        achieved_estimate(achieved_estimate),
        achieved_error(achieved_error) {}
  double achieved_estimate;
  double achieved_error;
};

// A time-stepping scheme produced a non-finite state.
class BlowupError : public Error {
 public:
  BlowupError(const std::string& msg, std::size_t step_index)
      : Error(msg), step_index(step_index) {}
  std::size_t step_index;
};

// A path was not simulated long enough for a tail-dependent quantity to
// converge; carries the achieved relative tail mass.
class HorizonError : public Error {
 public:
  HorizonError(const std::string& msg, double tail_fraction)
      : Error(msg), tail_fraction(tail_fraction) {}
  double tail_fraction;
};

// A statistical estimate has too little effective data (conditioning window
// too narrow, too few surviving replicates, too few window points, ...).
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& msg, double effective_size)
      : Error(msg), effective_size(effective_size) {}
  double effective_size;
};

// Invalid or inconsistent run configuration (CLI / config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A simulation exceeded its memory/population budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

}  // namespace sbmlab
