#pragma once

#include <stdexcept>
#include <string>

namespace ldp {

// Validation problems: bad model input, schema violations. CLI exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: singular systems, missing roots, blowups. CLI exit code 3.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularMatrixError : NumericalError {
  explicit SingularMatrixError(const std::string& msg) : NumericalError(msg) {}
};

struct DomainError : ValidationError {
  explicit DomainError(const std::string& msg) : ValidationError(msg) {}
};

// Riccati equation has no root with the required definiteness.
struct NoSolutionError : NumericalError {
  explicit NoSolutionError(const std::string& msg) : NumericalError(msg) {}
};

// Linear system D^T p2 = -E inconsistent (semistable D, E outside range).
struct UnsolvableError : NumericalError {
  explicit UnsolvableError(const std::string& msg) : NumericalError(msg) {}
};

struct UnstableError : NumericalError {
  explicit UnstableError(const std::string& msg) : NumericalError(msg) {}
};

struct NoConvergenceError : NumericalError {
  explicit NoConvergenceError(const std::string& msg) : NumericalError(msg) {}
};

struct DomainTooNarrowError : NumericalError {
  explicit DomainTooNarrowError(const std::string& msg) : NumericalError(msg) {}
};

struct NumericalBlowupError : NumericalError {
  explicit NumericalBlowupError(const std::string& msg) : NumericalError(msg) {}
};

struct DegenerateInfeasibleError : NumericalError {
  explicit DegenerateInfeasibleError(const std::string& msg) : NumericalError(msg) {}
};

struct NotAttainedError : NumericalError {
  explicit NotAttainedError(const std::string& msg) : NumericalError(msg) {}
};

}  // namespace ldp
