#pragma once

#include <stdexcept>
#include <string>

namespace safbage {

/// Base of every error thrown by the library. `category()` is a short
/// machine-parsable tag used by the CLI for its one-line error report.
class Error : public std::runtime_error {
public:
    Error(std::string category, const std::string& what)
        : std::runtime_error(what), category_(std::move(category)) {}

    const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

struct DecodeError : Error {
    explicit DecodeError(const std::string& what) : Error("decode", what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

struct BuildError : Error {
    explicit BuildError(const std::string& what) : Error("build", what) {}
};

struct ParseError : Error {
    explicit ParseError(const std::string& what) : Error("parse", what) {}
};

struct DivergedError : Error {
    explicit DivergedError(const std::string& what) : Error("diverged", what) {}
};

struct EvaluationError : Error {
    explicit EvaluationError(const std::string& what) : Error("evaluation", what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error("io", what) {}
};

} // namespace safbage
