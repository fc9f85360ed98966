#pragma once

#include <stdexcept>
#include <string>

namespace maxinv {

// Malformed or dimension-mismatched arguments.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// The assembled linear program has no feasible point.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace maxinv
