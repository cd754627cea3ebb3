#pragma once

#include <stdexcept>
#include <string>

namespace painpipe {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates the documented domain of a type (AU out of range, bad spec...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed or missing on-disk input.
class IngestError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor shape does not match what a network or layer expects.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace painpipe
