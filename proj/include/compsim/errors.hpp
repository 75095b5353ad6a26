#pragma once

#include <stdexcept>

namespace compsim {

/// Base class for every error the library raises on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad arguments, file contents, or configuration. CLI exit code 1.
struct ConfigError : Error {
  using Error::Error;
};

/// Misuse of an operation's contract (empty sample list, mismatched sizes).
struct ArgumentError : ConfigError {
  using ConfigError::ConfigError;
};

/// Evaluation time outside the system's time domain.
struct DomainError : ConfigError {
  using ConfigError::ConfigError;
};

/// Numerical failure while computing. CLI exit code 2.
struct NumericsError : Error {
  using Error::Error;
};

/// Pivot fell below the singularity threshold during factorization.
struct SingularMatrixError : NumericsError {
  using NumericsError::NumericsError;
};

/// Step control demanded a step below h_min.
struct StiffnessError : NumericsError {
  using NumericsError::NumericsError;
};

/// Step budget exhausted before reaching the end time.
struct BudgetError : NumericsError {
  using NumericsError::NumericsError;
};

/// Adaptive quadrature failed to converge.
struct QuadratureError : NumericsError {
  using NumericsError::NumericsError;
};

/// A pool mass fell to or below the positivity floor where an age
/// equation needs to divide by it.
struct DegenerateMassError : NumericsError {
  using NumericsError::NumericsError;
};

/// Total mass vanished where a mass-weighted mean is requested.
struct ZeroMassError : NumericsError {
  using NumericsError::NumericsError;
};

/// Every column sum vanished where an outflow-weighted mean is requested.
struct NoOutflowError : NumericsError {
  using NumericsError::NumericsError;
};

}  // namespace compsim
