#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace discern {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input values or incomplete/duplicated records.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Inconsistent settings (profile/spec mismatch, missing token, bad grid).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or schema-violating files. Message carries file/line context.
class LoadError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Raised when a backend gives up after its retry budget.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, std::string last_raw_text)
      : Error(what), last_raw_text_(std::move(last_raw_text)) {}
  const std::string& last_raw_text() const { return last_raw_text_; }

 private:
  std::string last_raw_text_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::uint64_t durable_offset)
      : Error(what), durable_offset_(durable_offset) {}
  std::uint64_t durable_offset() const { return durable_offset_; }

 private:
  std::uint64_t durable_offset_;
};

// A statistic is undefined for the given data (zero variance, zero norm...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class SingularDesignError : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

}  // namespace discern
