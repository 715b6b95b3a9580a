#pragma once

#include <stdexcept>
#include <string>

namespace duality {

// Invalid argument value (nonpositive rate, |rho| > 1, L < 3, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A time or index outside the range an object covers.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Problem too large for an exact method (state space, colourings).
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Argument outside the domain where a formula is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Input violates a structural precondition of the model.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace duality
