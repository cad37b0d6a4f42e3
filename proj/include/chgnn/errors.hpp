#pragma once

#include <stdexcept>
#include <string>

namespace chgnn {

// Base for all library errors. `kind()` is a stable machine-readable tag
// used by the CLI when emitting error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

// Malformed input file (bad JSON, wrong field type, missing field).
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse", msg) {}
};

// Structurally invalid data (invariant violation in an otherwise readable file).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error("validation", msg) {}
};

// Tensor shape mismatch.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error("shape", msg) {}
};

// Out-of-domain argument (negative temperature, zero dims, bad index).
class ParamError : public Error {
public:
    explicit ParamError(const std::string& msg) : Error("param", msg) {}
};

// Bad configuration value; message names the offending field.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

// Non-finite value, degenerate denominator, or diverged training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

// Bug guard (tape cycles and similar should-not-happen states).
class InternalError : public Error {
public:
    explicit InternalError(const std::string& msg) : Error("internal", msg) {}
};

// I/O failure (unreadable or unwritable file).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io", msg) {}
};

}  // namespace chgnn
