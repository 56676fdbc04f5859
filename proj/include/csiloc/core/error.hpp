#pragma once

#include <stdexcept>
#include <string>

namespace csiloc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor extents or layer geometry do not chain.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent on-disk data (NPY, canonical container, checkpoint).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, degenerate statistics or geometry.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace csiloc
