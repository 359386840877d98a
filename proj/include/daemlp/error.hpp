#pragma once

#include <stdexcept>
#include <string>

namespace daemlp {

enum class ErrorKind {
    shape,
    numeric,
    domain,
    parse,
    format,
    io,
};

// Base of every library error. The kind drives the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error(ErrorKind::shape, "shape error: " + what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, "numeric error: " + what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, "domain error: " + what) {}
};

// Row-addressed failure while reading a dataset file.
struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error(ErrorKind::parse, "parse error: " + what) {}
};

// Model or config document that cannot be loaded.
struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::format, "load error: " + what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::io, "I/O error: " + what) {}
};

}  // namespace daemlp
