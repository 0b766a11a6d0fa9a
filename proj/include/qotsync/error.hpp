#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qotsync {

/// Malformed or out-of-range configuration (noise specs, capture setup, experiments).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Config-file validation failure. Carries every offending key, not just the first.
class ValidationError : public ConfigError {
public:
    explicit ValidationError(std::vector<std::string> fields, const std::string& detail)
        : ConfigError(detail), fields_(std::move(fields)) {}

    const std::vector<std::string>& fields() const noexcept { return fields_; }

private:
    std::vector<std::string> fields_;
};

/// Two timestamps that should delimit an interval coincide.
class DegenerateIntervalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class OutOfOrderError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotInitializedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV, config syntax) with the 1-based line it was found on.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A simulator-internal consistency check failed.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace qotsync
