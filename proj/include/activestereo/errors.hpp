#pragma once

#include <stdexcept>
#include <string>

namespace activestereo {

// Every module reports failures through this small exception family so that
// the CLI can map them to a nonzero exit with a message.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Sizes disagree (short left row, ragged gain rows, image pair mismatch).
struct DimensionError : Error {
    using Error::Error;
};

// No unblocked entry-to-exit path remains.
struct InfeasibleError : Error {
    using Error::Error;
};

// A confirmed match falls inside the forbidden zone of an earlier one.
struct ConflictError : Error {
    using Error::Error;
};

// Every column has already been queried.
struct ExhaustedError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

// Enumeration refused because the lattice has too many paths.
struct GuardError : Error {
    using Error::Error;
};

}  // namespace activestereo
