#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mhel {

// Base of every hard error raised by the library. `kind()` is a short stable
// token used by the CLI for machine-parsable diagnostics.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
  virtual const char* kind() const noexcept { return "error"; }
};

// Malformed input file. `line()` is 1-based, 0 when not line-oriented.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& message);
  const std::string& path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "format"; }

 private:
  std::string path_;
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

// A caller broke an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};

class DimensionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "dimension"; }
};

// Connection-level failure (refused, reset, timeout). Retryable.
class TransportError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "transport"; }
};

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& context);
  int status() const noexcept { return status_; }
  const char* kind() const noexcept override { return "http-status"; }

 private:
  int status_;
};

// LLM backend failure escalated by the `fail_run` policy.
class BackendError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "backend"; }
};

// Thrown by encoders when one element of a batch fails.
class BatchError : public Error {
 public:
  BatchError(std::size_t index, const std::string& cause);
  std::size_t index() const noexcept { return index_; }
  const char* kind() const noexcept override { return "batch"; }

 private:
  std::size_t index_;
};

}  // namespace mhel
