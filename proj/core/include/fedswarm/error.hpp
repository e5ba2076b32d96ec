#pragma once

#include <stdexcept>
#include <string>

namespace fedswarm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pose or arena that violates the world invariants (pose outside bounds, bad geometry).
class InvalidWorldState : public Error {
public:
    using Error::Error;
};

/// Layer or weight-set shapes that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf in gradients or weights. Training aborts the step that produced it.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid argument to an operation (empty batch, tau outside [0, 1], ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Configuration file could not be parsed or failed validation. The message names the field.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fedswarm
