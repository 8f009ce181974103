#ifndef BINID_ERRORS_HPP
#define BINID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace binid {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

/// Metric matrix failed the positive-definiteness check.
struct SingularMetric : Error {
    using Error::Error;
};

struct NotSymmetric : Error {
    using Error::Error;
};

/// The noise density infimum over the working interval is <= 0.
struct NonpositiveDensity : Error {
    using Error::Error;
};

struct NonFiniteInput : Error {
    using Error::Error;
};

struct InvalidConfig : Error {
    using Error::Error;
};

/// Config-file parse or semantic failure; message carries key and line.
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace binid

#endif // BINID_ERRORS_HPP
