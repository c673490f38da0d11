#pragma once

#include <stdexcept>
#include <string>

namespace rmtsusy {

// Base class for everything the library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input (bad JSON, mismatched sizes, ...).
struct ConfigurationError : Error {
  using Error::Error;
};

// A configured budget (generator count, enumeration size) would be exceeded.
struct ResourceError : Error {
  using Error::Error;
};

// A numerical procedure failed to reach its tolerance.
struct NumericalError : Error {
  using Error::Error;
};

// A caller broke a documented precondition.
struct ContractViolation : Error {
  using Error::Error;
};

}  // namespace rmtsusy
