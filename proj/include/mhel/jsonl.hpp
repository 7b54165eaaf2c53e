#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace mhel {

using json = nlohmann::json;

// Calls `visit(object, line_number)` for every non-blank line of a JSONL file.
// Lines that are not JSON objects raise FormatError with the line number.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& visit);

// Serializes `value` with sorted object keys, no whitespace, and every
// floating-point number printed with exactly six decimals. Non-finite floats
// become null. Output is byte-stable for equal inputs.
std::string canonical_dump(const json& value);

// Writes `content` to `path`, replacing the file. Returns bytes written.
std::size_t write_text_file(const std::string& path, std::string_view content);

std::string format_fixed6(double value);

// True when `text` is well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

// Typed field accessors raising FormatError(path, line) on a type mismatch.
std::string required_string(const json& obj, const char* key, const std::string& path,
                            std::size_t line);
std::string optional_string(const json& obj, const char* key, const std::string& path,
                            std::size_t line);

}  // namespace mhel
