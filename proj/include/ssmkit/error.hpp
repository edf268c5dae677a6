#ifndef SSMKIT_ERROR_HPP
#define SSMKIT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ssmkit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong sizes, bad JSON, out-of-range indices.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A spectral precondition does not hold (nonnegative real parts, empty subspace, ...).
class SpectralPrecondition : public Error {
 public:
  using Error::Error;
};

class UnstableSpectrum : public SpectralPrecondition {
 public:
  using SpectralPrecondition::SpectralPrecondition;
};

class NotSemisimple : public SpectralPrecondition {
 public:
  using SpectralPrecondition::SpectralPrecondition;
};

/// Complex coefficients that should have been conjugate-symmetric are not.
class ConjugateSymmetryError : public Error {
 public:
  using Error::Error;
};

/// A zero divisor met a nonzero right-hand side in a coefficient recursion.
class ResonanceObstruction : public Error {
 public:
  ResonanceObstruction(std::string what, std::string monomial, int direction)
      : Error(std::move(what)), monomial_(std::move(monomial)), direction_(direction) {}

  const std::string& monomial() const noexcept { return monomial_; }
  int direction() const noexcept { return direction_; }

 private:
  std::string monomial_;
  int direction_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ssmkit

#endif  // SSMKIT_ERROR_HPP
