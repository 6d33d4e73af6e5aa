#pragma once

#include <stdexcept>
#include <string>

namespace shadow_merton {

// Thrown when inputs violate a documented precondition or parameter invariant.
// The message names the first violated invariant.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& what) : std::invalid_argument(what) {}
};

// Thrown when a numerical routine fails to converge or detects an internal
// inconsistency (bracketing failure, stalled bisection, derivative bound
// exceeded, value iteration cap, ...).
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an artifact (solution file, simulated path) does not match the
// inputs it is being combined with.
class provenance_error : public std::runtime_error {
public:
    explicit provenance_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace shadow_merton
