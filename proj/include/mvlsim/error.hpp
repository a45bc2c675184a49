#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mvlsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Netlist text could not be turned into a valid Netlist.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& message)
        : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + message),
          line_(line), column_(column), message_(message) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// A structurally invalid value was handed to an operation (bad index, bad radix, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// LU factorization hit a pivot below the singularity threshold.
class SingularMatrix : public Error {
public:
    SingularMatrix(std::size_t pivot, const std::string& what)
        : Error(what), pivot_(pivot) {}
    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Newton iteration failed to meet the tolerances.
class NonConvergence : public Error {
public:
    NonConvergence(double time, std::string node, const std::string& what)
        : Error(what), time_(time), node_(std::move(node)) {}
    [[nodiscard]] double time() const noexcept { return time_; }
    [[nodiscard]] const std::string& node() const noexcept { return node_; }

private:
    double time_;
    std::string node_;
};

/// A measurement could not be taken on the given waveform(s).
class MeasurementError : public Error {
public:
    using Error::Error;
};

}  // namespace mvlsim
