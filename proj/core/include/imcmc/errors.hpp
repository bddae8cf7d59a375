#pragma once

#include <stdexcept>
#include <string>

namespace imcmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimension mismatch between kernels, measures and functions.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. V < 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// The kernel has more than one stationary distribution.
class ReducibilityError : public Error {
public:
    using Error::Error;
};

/// The Poisson system is singular beyond its expected rank-one deficiency.
class ErgodicityError : public Error {
public:
    using Error::Error;
};

/// ||P^n - pi|| does not decay geometrically over the inspected range.
class NonGeometricDecayError : public Error {
public:
    using Error::Error;
};

/// Inconsistent model configuration (e.g. auxiliary kernel not theta*-stationary).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// Observed data contradict the oracle in a way no tolerance can explain.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// Invariant that should be unreachable was broken.
class InternalError : public Error {
public:
    using Error::Error;
};

/// Suite or config validation failure; `field()` names the offending entry.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace imcmc
