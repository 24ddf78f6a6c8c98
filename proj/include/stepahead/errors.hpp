// Error taxonomy shared by all stepahead modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stepahead {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched vector lengths at an operation boundary.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A non-finite value (NaN or infinity) produced or consumed where finiteness
// is required. Non-finite values are hard errors at operation boundaries,
// never silently propagated.
class NumericError : public Error {
public:
    using Error::Error;
};

// A domain invariant was violated (e.g. a negative second-moment entry).
class InvariantError : public Error {
public:
    using Error::Error;
};

// An operation precondition was not met (e.g. bias correction at t = 0).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss or parameter. Carries the 1-based
// index of the update step that failed.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, long long step)
        : Error(what), step_(step) {}
    long long step() const noexcept { return step_; }

private:
    long long step_;
};

// Invalid configuration: bad key, bad value, missing file, inconsistent plan.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data (CSV cells, labels out of range, empty datasets).
class DataError : public Error {
public:
    using Error::Error;
};

// Filesystem-level failure (unreadable/unwritable path).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace stepahead
