#pragma once

#include <stdexcept>
#include <string>

namespace ip2cp {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

// File contents violate a documented format (PNG kind, model file, JSON, WKT).
class FormatError : public Error {
public:
    using Error::Error;
};

// Model/SVM file that does not start with the expected magic bytes.
class NotAModelFileError : public FormatError {
public:
    using FormatError::FormatError;
};

// Model/SVM file ends before the declared payload.
class TruncatedFileError : public FormatError {
public:
    TruncatedFileError(const std::string& what, std::size_t expected, std::size_t actual)
        : FormatError(what), expected_bytes(expected), actual_bytes(actual) {}
    std::size_t expected_bytes;
    std::size_t actual_bytes;
};

// Dimensions of two inputs disagree, or a tensor does not fit a layer.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Configuration value outside its documented range.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Input data is semantically invalid (single-class set, malformed mask, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite value.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace ip2cp
