#pragma once

#include <stdexcept>
#include <string>

namespace autopersuade {

/// Bad inputs: malformed files, violated preconditions, inconsistent config.
/// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A solver produced non-finite values, failed to certify optimality, or
/// violated a guaranteed invariant. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace autopersuade
