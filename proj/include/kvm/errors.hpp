#pragma once

#include <stdexcept>
#include <string>

namespace kvm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A dense matrix left the zero-diagonal tridiagonal manifold.
class StructureViolation : public Error {
 public:
  using Error::Error;
};

/// The +/- eigenvalue symmetry of a zero-diagonal Jacobi matrix failed.
class PairingViolation : public Error {
 public:
  using Error::Error;
};

/// Two eigenvalues are closer than the gap tolerance.
class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

/// Eigenvalue magnitudes are not strictly separated (or an even-order
/// matrix has a zero eigenvalue).
class DegenerateMagnitudes : public Error {
 public:
  using Error::Error;
};

/// An initial off-diagonal entry is zero, so its limit sign is undefined.
class ZeroEntry : public Error {
 public:
  using Error::Error;
};

/// The input already is an equilibrium of the flow.
class EquilibriumInput : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Initial condition rejected by the flow (zero entry or degenerate spectrum).
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

/// Adaptive step size dropped below the configured minimum.
class StepUnderflow : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input document with inconsistent content.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace kvm
