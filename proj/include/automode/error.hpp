#pragma once

#include <stdexcept>
#include <string>

namespace automode {

/// Base for every error the library raises. `user_error()` separates bad
/// inputs/configuration (CLI exit code 2) from internal failures (exit code 1).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, bool user_error = true)
        : std::runtime_error(what), user_error_(user_error) {}

    bool user_error() const noexcept { return user_error_; }

private:
    bool user_error_;
};

/// Malformed input text (dataset line, model file, WAV header, config).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Dimension, feature-group or schema-hash disagreement.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Unsupported file-format version.
class VersionError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace automode
