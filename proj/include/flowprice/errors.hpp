#pragma once

#include <stdexcept>
#include <string>

namespace flowprice {

// Error taxonomy shared by the library and the CLI exit-code contract:
// missing_input -> 1, invalid_parameter/unsupported_regime/configuration -> 2,
// data_validation -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameterError : Error {
    using Error::Error;
};

struct UnsupportedRegimeError : Error {
    using Error::Error;
};

struct DegenerateParameterError : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct ConfigurationError : Error {
    using Error::Error;
};

struct MissingInputError : Error {
    using Error::Error;
};

struct DataValidationError : Error {
    DataValidationError(std::string msg, long row) : Error(std::move(msg)), row(row) {}
    long row;  // 1-based row number in the offending file
};

struct UndefinedRatioError : Error {
    using Error::Error;
};

struct MissingSeedError : Error {
    using Error::Error;
};

}  // namespace flowprice
