#pragma once

#include <stdexcept>
#include <string>

namespace bbm {

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or precondition on inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A hard resource bound (live particle cap) was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or violated numerical invariants.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Query against an arena, snapshot or table that cannot be answered.
class QueryError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a formula (t <= 0, Z <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Statistical diagnostics failed (degenerate samples, collapsed ESS, ...).
class DiagnosticsError : public Error {
 public:
  using Error::Error;
};

// Output or input files that cannot be opened, written or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace bbm
