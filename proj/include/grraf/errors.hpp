#pragma once

#include <stdexcept>
#include <string>

namespace grraf {

/// Caller violated an operation's precondition (wrong graph kind, bad id, tag mismatch).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Input text could not be parsed. Carries a 1-based line and column.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Parsed input breaks a graph invariant (endpoint out of range, duplicate edge, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A backend, file, or environment setting needed to run is missing or unusable.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace grraf
