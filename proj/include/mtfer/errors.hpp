#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtfer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or lengths that do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A scalar argument outside its admissible interval.
class RangeError : public Error {
public:
    using Error::Error;
};

/// NaN or infinity where a finite value is required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// API misuse, e.g. calling backward without a forward cache.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Invalid model, training or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input bytes that do not follow the expected file format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A structurally valid file whose sizes or offsets do not add up.
class CorruptionError : public Error {
public:
    using Error::Error;
};

/// A file written by an unknown format version.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Class labels that are out of range or not one-hot.
class LabelError : public Error {
public:
    using Error::Error;
};

/// Eye landmarks that are unusable (out of bounds or swapped).
class LandmarkError : public Error {
public:
    using Error::Error;
};

/// A file referenced by a dataset that cannot be found or read.
class IngestionError : public Error {
public:
    using Error::Error;
};

/// A malformed record in a tabular input; carries the 1-based row number.
class RowError : public Error {
public:
    RowError(std::size_t row, const std::string& what)
        : Error("row " + std::to_string(row) + ": " + what), row_(row), detail_(what) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t row_;
    std::string detail_;
};

/// A collection too small for the requested operation.
class SizeError : public Error {
public:
    using Error::Error;
};

}  // namespace mtfer
