#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vanet {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed trace document. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Timestamps in a trace are not strictly increasing.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// A record lacks a required field (or holds an unparsable value).
/// `where` names the offending record, e.g. "line 7" or "timestep 3 vehicle 2".
class FieldError : public Error {
 public:
  FieldError(const std::string& field, const std::string& where)
      : Error(where + ": missing or invalid required field '" + field + "'"), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidPathError : public Error {
 public:
  using Error::Error;
};

/// A link strategy violates one of the topology constraints.
/// `constraint()` is one of "v2v_range", "v2i_range", "v2v_degree",
/// "v2i_degree", "bandwidth", "self_link", "unknown_node", "bandwidth_key".
class ConstraintViolation : public Error {
 public:
  ConstraintViolation(std::string constraint, const std::string& detail)
      : Error(constraint + ": " + detail), constraint_(std::move(constraint)) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

}  // namespace vanet
