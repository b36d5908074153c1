#pragma once

#include <stdexcept>
#include <string>

namespace reprbench {

// Process exit codes used by the CLI.
enum class ExitCode : int {
    ok = 0,
    config_error = 2,
    data_error = 3,
    numerical_failure = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::data_error; }
};

// Malformed container or CSV.
class FormatError : public Error {
public:
    using Error::Error;
};

// Payload shorter than the header promises.
class TruncationError : public FormatError {
public:
    using FormatError::FormatError;
};

// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
};

class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numerical_failure; }
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace reprbench
