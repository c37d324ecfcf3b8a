#pragma once

#include <stdexcept>
#include <string>

namespace entk {

// Process exit codes shared by the CLI and the acceptance harness.
enum class ExitCode : int { ok = 0, verification_failure = 1, config_error = 2, numerical_failure = 3 };

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual ExitCode exit_code() const { return ExitCode::numerical_failure; }
};

class InvalidKernelError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class SingularSystemError : public Error {
public:
    using Error::Error;
};

class RealityViolationError : public Error {
public:
    using Error::Error;
};

class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::config_error; }
};

class IoError : public Error {
public:
    using Error::Error;
    ExitCode exit_code() const override { return ExitCode::config_error; }
};

class ParseError : public IoError {
public:
    ParseError(const std::string& file, long line, const std::string& what);
    long line() const { return line_; }

private:
    long line_;
};

}  // namespace entk
