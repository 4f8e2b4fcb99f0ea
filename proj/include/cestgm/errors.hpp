#ifndef CESTGM_ERRORS_HPP
#define CESTGM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cestgm {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class OutOfSupport : public Error {
public:
    using Error::Error;
};

class InvalidNaturalParameter : public Error {
public:
    using Error::Error;
};

// Model validation failures carry which constraint and which block broke.
class ValidationError : public Error {
public:
    using Error::Error;
};

class SymmetryViolation : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SelfCouplingAtLagZero : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class GridCapExceeded : public Error {
public:
    using Error::Error;
};

class UnboundedEnvelope : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iterations, double residual)
        : Error(what), iterations(iterations), residual(residual) {}
    int iterations;
    double residual;
};

class NonPositiveIterate : public Error {
public:
    using Error::Error;
};

class OracleSizeExceeded : public Error {
public:
    using Error::Error;
};

class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

class NormalizationFailure : public Error {
public:
    using Error::Error;
};

}  // namespace cestgm

#endif
