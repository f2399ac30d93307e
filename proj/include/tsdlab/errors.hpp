#pragma once

#include <stdexcept>
#include <string>

namespace tsdlab {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite entries where finite values are required.
struct InvalidMatrix : Error {
    using Error::Error;
};

// Operand dimensions do not line up.
struct ShapeMismatch : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// Operation not legal in the object's current phase/method.
struct InvalidState : Error {
    using Error::Error;
};

// Projection denominator too close to zero to report a meaningful factor.
struct DegenerateProjection : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Config-file problem; `line` is 1-based, 0 when not tied to a line.
struct ConfigError : Error {
    int line = 0;
    ConfigError(const std::string& msg, int line_no = 0) : Error(msg), line(line_no) {}
};

// Training produced a non-finite loss.
struct NumericDivergence : Error {
    using Error::Error;
};

}  // namespace tsdlab
