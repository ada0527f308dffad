#pragma once

#include <stdexcept>
#include <string>

namespace sparsedde {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

/// A reciprocal-type candidate was evaluated with an operand below the
/// singularity floor. Callers treat this as "reject the candidate for this
/// dataset", not as a crash.
class SingularOperand : public Error {
  public:
    using Error::Error;
};

/// A simulated state exceeded the overflow bound (or became non-finite).
class Diverged : public Error {
  public:
    Diverged(const std::string &msg, double time) : Error(msg), time_of_divergence(time) {}
    double time_of_divergence;
};

/// Too few samples for the requested stencil/filter.
class TooShort : public Error {
  public:
    using Error::Error;
};

class CutoffOutOfRange : public Error {
  public:
    using Error::Error;
};

/// The delay index leaves fewer effective rows than library columns.
class DelayTooLarge : public Error {
  public:
    using Error::Error;
};

class WindowTooSmall : public Error {
  public:
    using Error::Error;
};

class WindowTouchesZero : public Error {
  public:
    using Error::Error;
};

/// Cholesky factorization failed even after one jitter retry.
class CholeskyFailure : public Error {
  public:
    using Error::Error;
};

/// Config file is syntactically or semantically invalid. `where` is a
/// JSON-pointer-style path or a string position, embedded in the message.
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// The correlation gate found unresolved highly correlated candidate pairs.
class CorrelationGateError : public Error {
  public:
    using Error::Error;
};

/// Every posterior draw diverged during re-simulation.
class AllDrawsDiverged : public Error {
  public:
    using Error::Error;
};

} // namespace sparsedde
