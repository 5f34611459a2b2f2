#pragma once

#include <stdexcept>
#include <string>

namespace edurisk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or header (CLI exit code 2).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid parameters or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot support the requested computation, e.g. a missing
/// census population or a feature-count mismatch (CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

/// Labels or samples too degenerate to train or evaluate on (CLI exit code 3).
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace edurisk
