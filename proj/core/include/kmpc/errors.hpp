#pragma once

#include <stdexcept>
#include <string>

namespace kmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or unsupported configuration (joint count, scenario file, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Caller passed data with wrong dimensions, ordering or non-finite values.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed (SVD, non-finite integration result, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Not enough data to identify a model.
class IdentificationError : public Error {
public:
    using Error::Error;
};

/// The closed loop cannot continue (infeasible QP, diverged plant).
class ControllerError : public Error {
public:
    using Error::Error;
};

/// Reference trajectory optimization diverged.
class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace kmpc
