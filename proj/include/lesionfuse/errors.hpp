#ifndef LESIONFUSE_ERRORS_HPP
#define LESIONFUSE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lesionfuse {

// Error classes map 1:1 onto CLI exit codes (see tools/).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable / unwritable file.
struct IoError : Error {
    using Error::Error;
};

// Bad magic, truncated payload, unsupported datatype, malformed CSV.
struct FormatError : Error {
    using Error::Error;
};

// Volumes that must share dims/spacing do not.
struct DimensionMismatch : Error {
    using Error::Error;
};

// Out-of-contract argument (threshold out of range, off-grid angle, ...).
struct InvalidArgument : Error {
    using Error::Error;
};

} // namespace lesionfuse

#endif
