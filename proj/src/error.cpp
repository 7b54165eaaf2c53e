#include "mhel/error.hpp"

namespace mhel {

namespace {

std::string located(const std::string& path, std::size_t line, const std::string& message) {
  std::string out = path;
  if (line > 0) out += ":" + std::to_string(line);
  if (!out.empty()) out += ": ";
  return out + message;
}

}  // namespace

FormatError::FormatError(const std::string& path, std::size_t line, const std::string& message)
    : Error(located(path, line, message)), path_(path), line_(line) {}

HttpStatusError::HttpStatusError(int status, const std::string& context)
    : Error(context + ": HTTP status " + std::to_string(status)), status_(status) {}

BatchError::BatchError(std::size_t index, const std::string& cause)
    : Error("batch element " + std::to_string(index) + ": " + cause), index_(index) {}

}  // namespace mhel
