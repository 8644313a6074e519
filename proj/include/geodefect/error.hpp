#pragma once

#include <stdexcept>
#include <string>

namespace geodefect {

// Base class for everything the library throws. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: bad descriptor, bad parameters, bad config.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Point outside the chart, or a finite-difference stencil leaving it.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Loss of positive definiteness, rank deficiency, asymmetric operators.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// The global deformation exceeded its C^q budget before finishing.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace geodefect
