#pragma once

#include <stdexcept>
#include <string>

namespace birthflow {

// Base of every error raised by the library. Each subclass names one failure
// mode so callers can react (e.g. enlarge a grid on AliasingError).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A closed-form CF evaluation hit a denominator below its floor or produced a
// non-finite value.
class NumericalInstability : public Error {
 public:
  using Error::Error;
};

class QuadratureNonConvergence : public Error {
 public:
  using Error::Error;
};

// Truncated support lost more mass than the configured tolerance.
class TailMassViolation : public Error {
 public:
  using Error::Error;
};

class AliasingViolation : public Error {
 public:
  using Error::Error;
};

class NonRealProbability : public Error {
 public:
  using Error::Error;
};

class NegativeProbability : public Error {
 public:
  using Error::Error;
};

class StabilityViolation : public Error {
 public:
  using Error::Error;
};

class MassLossViolation : public Error {
 public:
  using Error::Error;
};

class SimulationCapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace birthflow
