#pragma once

#include <stdexcept>
#include <string>

namespace distalign {

// Base for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data or incoherent configuration. CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Dataset record rejected during parsing. Carries the 1-based line number
// and the offending field so diagnostics can point at the source.
class DatasetError : public ValidationError {
 public:
  DatasetError(int line, std::string field, const std::string& reason)
      : ValidationError("line " + std::to_string(line) + ", field '" + field +
                        "': " + reason),
        line_(line),
        field_(std::move(field)) {}

  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

// Scoring provider failure: transport, protocol violation, table miss,
// cache miss in offline mode, or a non-finite score. CLI exit code 2.
class BackendError : public Error {
 public:
  using Error::Error;
};

// A backend returned NaN or infinity for a continuation. Analysis excludes
// the affected question and counts it instead of clamping the score.
class NonFiniteScoreError : public BackendError {
 public:
  using BackendError::BackendError;
};

// A report stage received nothing to report. CLI exit code 3.
class EmptyResultsError : public Error {
 public:
  using Error::Error;
};

}  // namespace distalign
