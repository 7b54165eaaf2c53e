#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mhel/http.hpp"
#include "mhel/jsonl.hpp"
#include "mhel/vector_index.hpp"

namespace mhel {

inline constexpr std::string_view kEntityMarker = "[ENT]";

// Context text with the mention delimited by two `[ENT]` markers.
struct MarkedText {
  std::string text;
  std::string language;
  // Lookup key for precomputed vectors (typically the mention id). When empty
  // the text itself is the key.
  std::string key;
};

// Throws PreconditionError unless `text` holds exactly two markers around a
// mention that is non-empty after trimming whitespace.
void validate_marked_text(std::string_view text);

class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<float> encode(const MarkedText& marked) const = 0;
  // Elementwise equivalent to encode(); failures raise BatchError with the
  // failing index.
  virtual std::vector<std::vector<float>> encode_batch(std::span<const MarkedText> batch) const;
};

// 64-bit FNV-1a over (text, 0xFF, language, dim as 8 little-endian bytes).
std::uint64_t mock_encoder_seed(std::string_view text, std::string_view language, std::size_t dim);

// Deterministic stand-in: a pure function of (text, language, dim). Each
// coordinate is splitmix64(seed, column) mapped to [-1, 1).
class MockEncoder final : public Encoder {
 public:
  explicit MockEncoder(std::size_t dim);
  std::size_t dim() const override { return dim_; }
  std::vector<float> encode(const MarkedText& marked) const override;

 private:
  std::size_t dim_;
};

// Serves stored rows; row ids are the lookup keys.
class PrecomputedEncoder final : public Encoder {
 public:
  explicit PrecomputedEncoder(EmbeddingMatrix matrix);
  static PrecomputedEncoder load(const std::string& vectors_path, const std::string& ids_path);
  std::size_t dim() const override { return matrix_.dim; }
  std::vector<float> encode(const MarkedText& marked) const override;

 private:
  EmbeddingMatrix matrix_;
  std::unordered_map<std::string, std::size_t> row_of_;
};

// Client of the embedding service: POST {endpoint}/embed.
class HttpEncoder final : public Encoder {
 public:
  struct Options {
    std::size_t max_inflight = 4;
    RetryPolicy retry{};
    HttpTimeouts timeouts{};
  };

  HttpEncoder(const std::string& endpoint, std::size_t dim);
  HttpEncoder(const std::string& endpoint, std::size_t dim, Options options);
  ~HttpEncoder() override;

  std::size_t dim() const override { return dim_; }
  std::vector<float> encode(const MarkedText& marked) const override;
  std::vector<std::vector<float>> encode_batch(std::span<const MarkedText> batch) const override;

 private:
  struct Gate;
  json request(std::span<const MarkedText> batch) const;

  Endpoint endpoint_;
  std::size_t dim_;
  Options options_;
  std::unique_ptr<Gate> gate_;
};

// Parses one vector of a response; DimensionError on a length mismatch,
// FormatError on non-numbers or non-finite values.
std::vector<float> vector_from_json(const json& value, std::size_t dim);

enum class EncoderBackend { http, precomputed, mock };

struct EncoderConfig {
  EncoderBackend backend = EncoderBackend::mock;
  std::optional<std::string> endpoint;  // required for http
  std::size_t dim = 0;
  std::string vectors_path;  // precomputed only
  std::string ids_path;      // precomputed only
  std::size_t max_inflight = 4;
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config);

}  // namespace mhel
