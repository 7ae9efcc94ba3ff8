#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chunkalign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally parsed input that violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A canonical/annotation record is missing a field or has the wrong type.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& record_id, const std::string& field, const std::string& what)
      : Error("record '" + record_id + "', field '" + field + "': " + what),
        record_id_(record_id),
        field_(field) {}
  const std::string& record_id() const noexcept { return record_id_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string record_id_;
  std::string field_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run configuration (e.g. a preset whose inputs are missing).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical computation produced NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace chunkalign
