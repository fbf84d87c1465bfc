#pragma once

#include <stdexcept>
#include <string>

namespace lbpcg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised for malformed or inconsistent configuration (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

// Raised when a pipeline stage's upstream artifact is missing (exit code 3).
struct DependencyError : Error {
    using Error::Error;
};

// Raised when training data cannot support the requested fit (exit code 4).
struct DegenerateDataError : Error {
    using Error::Error;
};

struct DegenerateValidationError : DegenerateDataError {
    using DegenerateDataError::DegenerateDataError;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct SizeOverflowError : Error {
    using Error::Error;
};

struct SerializationError : Error {
    using Error::Error;
};

struct VersionMismatchError : SerializationError {
    using SerializationError::SerializationError;
};

struct MissingCategoryError : Error {
    using Error::Error;
};

struct PoolExhaustedError : Error {
    using Error::Error;
};

struct ContractError : Error {
    using Error::Error;
};

}  // namespace lbpcg
