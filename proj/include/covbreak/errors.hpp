#pragma once

#include <stdexcept>
#include <string>

namespace covbreak {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite or otherwise malformed numeric input.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

// Too few observations for the requested estimate (|I_s| < 2 and similar).
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// A central point outside its admissible set, an index outside the sample.
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

// Sample shorter than a window scan requires (N < 2n + 1).
class SampleTooShortError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration: mismatched window sets, bad replicate counts,
// windows too large for the horizon.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Shape mismatch between two inputs that must agree (p vs p, matrix shapes).
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// Localization requested on a report that did not reject.
class NoDetectionError : public Error {
public:
    using Error::Error;
};

// Malformed external data (parse failures, ragged rows, bad cells).
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace covbreak
