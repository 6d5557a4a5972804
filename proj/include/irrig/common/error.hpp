#pragma once

#include <stdexcept>
#include <string>

namespace irrig {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A required input artifact (checkpoint, log, surrogate) is absent (CLI exit code 4).
class MissingArtifact : public Error {
public:
    using Error::Error;
};

/// Argument violates a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace irrig
