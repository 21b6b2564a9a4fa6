#pragma once

#include <stdexcept>
#include <string>

namespace metmorph {

// Process exit codes used by the command-line tool.
enum class ExitCode : int { ok = 0, failure = 1, schema = 2, numerical = 3, io = 4 };

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::failure; }
};

/// Malformed or inconsistent input: wrong columns, unknown labels, id mismatches.
class SchemaError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::schema; }
};

/// Non-finite values, failed convergence, undefined statistics.
class NumericalError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::numerical; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

} // namespace metmorph
