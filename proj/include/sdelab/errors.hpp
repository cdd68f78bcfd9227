#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdelab {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Matrix handed to a factorization is not symmetric positive definite.
struct NotPositiveDefiniteError : Error {
    using Error::Error;
};

// Evaluation requested at a declared singular point with no resolution rule.
struct SingularPointError : Error {
    using Error::Error;
};

// An optional coefficient field required by the requested operation is absent.
struct MissingFieldError : Error {
    using Error::Error;
};

// Numeric domain violation during field evaluation (log of non-positive
// value, division by zero, 0 raised to a negative power, NaN result).
struct DomainError : Error {
    using Error::Error;
};

struct SyntaxError : Error {
    SyntaxError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (at byte " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

struct ArityError : Error {
    using Error::Error;
};

struct IndexOutOfRangeError : Error {
    using Error::Error;
};

// Point lies outside the density grid box.
struct OutOfBoxError : Error {
    using Error::Error;
};

// Marginal extraction found no usable samples.
struct EmptyLawError : Error {
    using Error::Error;
};

// Density solve produced a non-positive cell value.
struct NonPositiveSolutionError : Error {
    NonPositiveSolutionError(const std::string& msg, long cell, double value)
        : Error(msg), worst_cell(cell), worst_value(value) {}
    long worst_cell;
    double worst_value;
};

struct SingularSystemError : Error {
    using Error::Error;
};

// Bad configuration file or command-line parameters.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace sdelab
