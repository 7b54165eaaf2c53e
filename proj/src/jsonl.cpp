#include "mhel/jsonl.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>

#include "mhel/error.hpp"

namespace mhel {

void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& visit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path, number, std::string("malformed JSON: ") + e.what());
    }
    if (!value.is_object()) throw FormatError(path, number, "expected a JSON object");
    visit(value, number);
  }
}

std::string format_fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  std::string out(buf);
  if (out == "-0.000000") out = "0.000000";
  return out;
}

namespace {

void dump_into(const json& value, std::string& out) {
  switch (value.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      // nlohmann::json stores objects in a std::map, so iteration is key-sorted.
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        first = false;
        out += json(key).dump();
        out += ':';
        dump_into(item, out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) out += ',';
        dump_into(value[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double d = value.get<double>();
      out += std::isfinite(d) ? format_fixed6(d) : "null";
      break;
    }
    default:
      out += value.dump();
  }
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

std::size_t write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("write failed for " + path);
  return content.size();
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= text.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range code points.
    if ((extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) || (extra == 3 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

std::string required_string(const json& obj, const char* key, const std::string& path,
                            std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw FormatError(path, line, std::string("missing field \"") + key + "\"");
  }
  if (!it->is_string()) {
    throw FormatError(path, line, std::string("field \"") + key + "\" must be a string");
  }
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& path,
                            std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw FormatError(path, line, std::string("field \"") + key + "\" must be a string");
  }
  return it->get<std::string>();
}

}  // namespace mhel
