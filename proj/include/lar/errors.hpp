#pragma once

#include <stdexcept>

namespace lar {

// Non-finite values where finite math was required (exit code 3 at the CLI).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Required upstream artifact not found (exit code 2 at the CLI).
struct MissingInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lar
