#pragma once

#include <stdexcept>
#include <string>

namespace lent {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Truncated Levy measure has no mass left above the cutoff.
struct TruncatedMassZero : Error {
  using Error::Error;
};

// A functional or one-mark map produced NaN/inf.
struct NonFiniteValue : Error {
  using Error::Error;
};

// SDE trajectory blew up (non-finite state or Jacobian entry).
struct NonFiniteState : Error {
  using Error::Error;
};

// Flow Jacobian condition number exceeded the invertibility guard.
struct SingularJacobian : Error {
  using Error::Error;
};

// The moment-scale check requires coefficients vanishing at zero.
struct CoefficientNotVanishing : Error {
  using Error::Error;
};

struct BandwidthNonPositive : Error {
  using Error::Error;
};

// A mark space was handed a one-mark map it cannot differentiate
// (e.g. a driver-path mark without SDE-terminal structure).
struct UnsupportedFunctional : Error {
  using Error::Error;
};

// Experiment config parse/validation failure; message carries line/key info.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace lent
