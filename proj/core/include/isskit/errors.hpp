#pragma once

#include <stdexcept>
#include <string>

namespace isskit {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Comparison-function errors.
struct NegativeArgument : Error {
  using Error::Error;
};
struct OutOfTableRange : Error {
  using Error::Error;
};
struct NotInvertibleOnRange : Error {
  using Error::Error;
};
struct EmptyList : Error {
  using Error::Error;
};
struct DegenerateRange : Error {
  using Error::Error;
};

// Gain-operator errors.
struct DimensionMismatch : Error {
  using Error::Error;
};
struct SmallGainViolated : Error {
  using Error::Error;
};
struct UnverifiedPath : Error {
  using Error::Error;
};

// PDE errors.
struct RegistryUnknown : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct LinearSolveFailure : Error {
  using Error::Error;
};
struct EigensolverFailure : Error {
  using Error::Error;
};

// Lyapunov errors.
struct NotHurwitz : Error {
  using Error::Error;
};
struct NoPositiveRadius : Error {
  using Error::Error;
};
struct MethodUnavailable : Error {
  using Error::Error;
};

// Example-runner errors.
struct TruncationTooSmall : Error {
  using Error::Error;
};
struct UnequalDiffusion : Error {
  using Error::Error;
};
struct ReactionNotOddMonotone : Error {
  using Error::Error;
};

}  // namespace isskit
