#pragma once

#include <stdexcept>
#include <string>

namespace pas {

// Bad configuration, arguments, or incompatible inputs. CLI maps these to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A correction table whose metadata does not match the requested run.
struct IncompatibleTableError : ConfigError {
  using ConfigError::ConfigError;
};

// Numerical failures the caller may want to distinguish. CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Direction vector unusable as a basis seed (zero norm or non-finite entries).
struct DegenerateDirectionError : NumericalError {
  using NumericalError::NumericalError;
};

// Spectral-energy fractions requested for an all-zero row matrix.
struct UndefinedVarianceError : NumericalError {
  using NumericalError::NumericalError;
};

// File system or integrity problems. CLI maps these to exit code 4.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pas
