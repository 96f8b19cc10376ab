#pragma once

#include <stdexcept>
#include <string>

namespace anderson {

// Basis index outside the admissible set (e.g. k_i = 0 on a sine axis).
class InvalidIndexError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arguments that violate a stated precondition (box/parity mismatch, bad ranges).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Grid too coarse for the requested truncation.
class AliasingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace anderson
