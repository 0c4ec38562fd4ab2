#pragma once

#include <stdexcept>
#include <string>

namespace edfnet {

// Root of every exception thrown by the library. The CLI maps
// ConfigError to exit code 2 and ValidationError to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DomainTruncationError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class SchemeInconsistencyError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

// Broken internal invariant (negative mass, corrupted event queue).
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace edfnet
