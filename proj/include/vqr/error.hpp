#pragma once

#include <stdexcept>
#include <string>

namespace vqr {

// Base for every error the library raises. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that violates a documented precondition (bad tau, age outside 0-18 y, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Cohort / pairs file problems: missing file, header mismatch, duplicate ids.
class DataError : public Error {
 public:
  using Error::Error;
};

// Model fitting failures (rank deficiency, divergence, insufficient data).
class FitError : public Error {
 public:
  using Error::Error;
};

// Persisted model could not be read back.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

class VersionMismatchError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class CorruptModelError : public ModelFormatError {
 public:
  CorruptModelError(const std::string& what, std::size_t byte_offset)
      : ModelFormatError(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace vqr
