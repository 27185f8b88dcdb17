#pragma once

#include <stdexcept>
#include <string>

namespace panelcast {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing or unexpected columns, feature-count mismatches, inconsistent sources.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A value outside its admissible range (percentages, interpolation hull, ...).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed input such as a non-numeric cell or a duplicate key.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Matrix/vector shapes that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid hyperparameters or experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training (non-finite loss, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace panelcast
