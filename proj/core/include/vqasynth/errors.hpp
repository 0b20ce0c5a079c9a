#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vqasynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration failed validation. `field_path()` is the dotted YAML key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field_path, const std::string& message)
      : Error(field_path + ": " + message), field_path_(std::move(field_path)) {}
  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

class CorpusError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class ImageError : public Error {
 public:
  using Error::Error;
};

// Network-level failure talking to a backend. Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The backend answered with an error payload. Not retried.
class BackendError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class DatasetFormatError : public Error {
 public:
  DatasetFormatError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace vqasynth
