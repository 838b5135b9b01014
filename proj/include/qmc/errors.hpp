// errors.hpp — exception hierarchy shared by every qmc module.
//
// The CLI maps DomainError/ConfigError to exit code 1 and NumericalError to 2.

#pragma once

#include <stdexcept>
#include <string>

namespace qmc {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A parameter or input outside the domain an operation is defined on.
struct DomainError : Error {
    using Error::Error;
};

// Malformed or inconsistent configuration (config file, flags, generator spec).
struct ConfigError : Error {
    using Error::Error;
};

// Eigensolver non-convergence, failed fits, violated numerical invariants.
struct NumericalError : Error {
    using Error::Error;
};

struct DegenerateFitError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace qmc
