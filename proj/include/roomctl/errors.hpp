#pragma once

#include <stdexcept>
#include <string>

namespace roomctl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a precondition.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Dimensions of the operands do not agree.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A factorization, iteration or eigensolve failed to produce a usable result.
class NumericFailure : public Error {
public:
    using Error::Error;
};

/// Internal data is inconsistent with what construction guarantees.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace roomctl
