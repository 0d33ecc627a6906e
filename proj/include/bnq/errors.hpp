#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace bnq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// graph-core
class CycleError : public Error { using Error::Error; };
class DuplicateEdge : public Error { using Error::Error; };
class SizeLimit : public Error { using Error::Error; };
class VariableMismatch : public Error { using Error::Error; };

// model fitting and scoring
class RankDeficient : public Error { using Error::Error; };
class InsufficientRows : public Error { using Error::Error; };
class DegenerateVariance : public Error { using Error::Error; };
class DegenerateColumn : public Error { using Error::Error; };
class SingularCorrelation : public Error { using Error::Error; };
class NumericalRange : public Error { using Error::Error; };
class NonPositiveValue : public Error { using Error::Error; };

// quality pipeline
class UnsortedInput : public Error { using Error::Error; };
class EmptyRelease : public Error { using Error::Error; };

// ingest
class SchemaMismatch : public Error { using Error::Error; };

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class HttpError : public Error {
public:
    HttpError(int status, const std::string& what)
        : Error("HTTP " + std::to_string(status) + ": " + what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class RateLimited : public Error { using Error::Error; };
class TruncatedPagination : public Error { using Error::Error; };
class CacheMiss : public Error { using Error::Error; };

/// Configuration validation failure; `field` is a dotted path into the config tree.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace bnq
