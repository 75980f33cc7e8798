#pragma once

#include <stdexcept>
#include <string>

namespace attn {

/// Malformed input or a violated precondition. The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parse failure tied to a line of a line-oriented input file.
class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& message)
        : ValidationError("line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Filesystem or codec failure. The CLI maps this to exit code 1.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace attn
