#pragma once

#include <stdexcept>
#include <string>

namespace partstat {

// Argument outside the mathematical domain of an operation (q >= 1 for a
// geometric law, mismatched dimensions, infeasible parameters, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Floating-point result not representable (exponential overflow/underflow).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// An enumeration or factorial would exceed the configured work budget.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A closed form was refused because its inputs make it numerically unsafe.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative procedure failed to converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace partstat
