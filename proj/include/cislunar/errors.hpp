#pragma once

#include <stdexcept>
#include <string>

namespace cislunar {

/// Base for all library failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's documented precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// State sits (numerically) on top of one of the primaries.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Adaptive integration could not make progress.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t_fail)
        : Error(what + " at t=" + std::to_string(t_fail)), time_(t_fail) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Iterative solver (corrector, root finder) failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Bad or inconsistent configuration / input files.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cislunar
