#pragma once

#include <stdexcept>
#include <string>

namespace qnd {

/// Bad input: dimensions, ranges, malformed configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical invariant (trace, Hermiticity, positivity) was violated.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The state has left the regime where a formula is defined
/// (vanishing mean spin, minimum on the boundary of a series, ...).
class RegimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace qnd
