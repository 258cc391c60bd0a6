#pragma once

#include <stdexcept>
#include <string>

namespace pglim {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural problems with inputs: dimensions, symmetry, definiteness.
struct ValidationError : Error {
  using Error::Error;
};
struct DimensionError : ValidationError {
  using ValidationError::ValidationError;
};

// Mathematical preconditions.
struct UnstableClosedLoop : Error {
  using Error::Error;
};
struct NotStabilizable : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct StepLeftStabilizingSet : Error {
  using Error::Error;
};
struct SingularNoise : Error {
  using Error::Error;
};
struct NullspaceViolation : Error {
  using Error::Error;
};
struct SingularRegressor : Error {
  using Error::Error;
};

// Filesystem failures surfaced through the CLI.
struct IoError : Error {
  using Error::Error;
};

}  // namespace pglim
