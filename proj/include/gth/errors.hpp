#pragma once

#include <stdexcept>
#include <string>

namespace gth {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or size constraint violated (r > d, mismatched operands, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Bad values in user-supplied data: non-finite entries, entries outside
// the allowed set, invalid configuration.
struct InputError : Error {
    using Error::Error;
};

// Numerical failure: rank deficiency, rejection sampling exhausted.
struct NumericError : Error {
    using Error::Error;
};

// File problems: missing, truncated, wrong magic.
struct IoError : Error {
    using Error::Error;
};

} // namespace gth
