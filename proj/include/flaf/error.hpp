#pragma once

#include <stdexcept>
#include <string>

namespace flaf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite samples, empty blocks, mismatched lengths.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Operation not defined for the configured variant (e.g. per-sample RV expansion).
class Unsupported : public Error {
public:
    using Error::Error;
};

/// Parameter outside its admissible range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Adaptive weights left the numerically safe region.
class DivergenceError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Raised by analysis routines when a correlation matrix is not positive definite.
class IllConditioned : public Error {
public:
    using Error::Error;
};

} // namespace flaf
