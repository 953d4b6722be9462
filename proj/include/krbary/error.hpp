#pragma once

#include <stdexcept>
#include <string>

namespace krbary {

// Malformed input or violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A size cap or regime guard refused the request. Exit code 3.
class GuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical breakdown inside a solver; should not happen on valid input.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace krbary
