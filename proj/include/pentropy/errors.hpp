#pragma once

#include <stdexcept>
#include <string>

namespace pentropy {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Probability vector fails validation (negative mass, sum off by more than
/// the stated tolerance, empty, ...).
class InvalidDistributionError : public Error {
  public:
    using Error::Error;
};

/// Operation not available for this system (e.g. exact joins on a
/// sampling-only system).
class UnsupportedOperationError : public Error {
  public:
    using Error::Error;
};

/// Joint label support would exceed the configured cap.  The message tells
/// the caller to reduce the progression length or the cell count.
class CombinatorialExplosionError : public Error {
  public:
    using Error::Error;
};

/// Orbit or set query escapes the built tower stages; the caller must build
/// deeper stages first.
class NeedsDeeperStageError : public Error {
  public:
    using Error::Error;
};

/// Building another stage would exceed the configured total-measure bound.
class StageLimitError : public Error {
  public:
    using Error::Error;
};

/// Spacer synthesis exhausted its escalation budget.
class SynthesisFailureError : public Error {
  public:
    SynthesisFailureError(const std::string& what, int first_failing_j)
        : Error(what), first_failing_j(first_failing_j) {}
    int first_failing_j;
};

/// Covariance Gram matrix has an eigenvalue below the clipping tolerance.
class IllConditionedCovarianceError : public Error {
  public:
    using Error::Error;
};

/// Spectral measure fails validation (mass, symmetry, lacunarity).
class InvalidMeasureError : public Error {
  public:
    using Error::Error;
};

/// Bad argument not covered by a more specific error above.
class InvalidArgumentError : public Error {
  public:
    using Error::Error;
};

}  // namespace pentropy
