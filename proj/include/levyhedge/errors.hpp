#pragma once

#include <stdexcept>
#include <string>

namespace levyhedge {

/// Malformed input to a library call (bad sizes, out-of-range parameters).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Market parameters violate a structural requirement (e.g. psi <= -1).
class InvalidModel : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// The minimization of the generator has no solution for this market.
class NotWellPosed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bounds from the mixed-sign minimizer estimate are not defined.
class BoundsUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative procedure failed to converge.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration file could not be parsed or is inconsistent.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace levyhedge
