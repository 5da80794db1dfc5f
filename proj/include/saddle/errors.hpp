#pragma once

#include <stdexcept>
#include <string>

namespace saddle {

// Base for all solver errors. `code()` is a stable module-qualified
// identifier ("spectral:ResonantLambda") used by the CLI error surface.
class SaddleError : public std::runtime_error {
public:
  SaddleError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Invalid input or parameters outside the admissible range. CLI exit code 2.
class PreconditionError : public SaddleError {
public:
  using SaddleError::SaddleError;
};

// An iteration failed to converge. CLI exit code 3.
class ConvergenceError : public SaddleError {
public:
  using SaddleError::SaddleError;
};

// Non-finite values or invalid evaluation points encountered at runtime.
class NumericError : public SaddleError {
public:
  using SaddleError::SaddleError;
};

inline PreconditionError resonant_lambda(double lambda, int index, double eig) {
  return PreconditionError("spectral:ResonantLambda",
                           "lambda = " + std::to_string(lambda) +
                               " is within tolerance of eigenvalue " +
                               std::to_string(index + 1) + " = " + std::to_string(eig) +
                               "; an open spectral gap is required");
}

inline NumericError zero_denominator() {
  return NumericError("functionals:ZeroDenominator",
                      "Rayleigh quotient undefined: |u|_{L^q} is numerically zero");
}

// Linking geometry could not be certified (b > 0 or a <= 0).
class GeometryBroken : public PreconditionError {
public:
  GeometryBroken(const std::string& what, std::string witness)
      : PreconditionError("minimax:GeometryBroken", what), witness_(std::move(witness)) {}
  const std::string& witness() const noexcept { return witness_; }

private:
  std::string witness_;
};

}  // namespace saddle
