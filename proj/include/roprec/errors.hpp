#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roprec {

/// Precondition violated by the caller (bad dimensions, out-of-range exponent, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configured resource cap was exceeded.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A recovery condition needed by a bound formula does not hold (rho <= 0, beta >= 1).
class ConditionViolated : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Iterative factorization failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations)
        : std::runtime_error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}

    std::size_t iterations() const noexcept { return iterations_; }

private:
    std::size_t iterations_;
};

/// Malformed text input; carries the 1-based line number where parsing stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

} // namespace roprec
