#include "mhel/encoder.hpp"

#include <cmath>
#include <semaphore>

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

void validate_marked_text(std::string_view text) {
  const auto first = text.find(kEntityMarker);
  const auto second =
      first == std::string_view::npos ? first : text.find(kEntityMarker, first + kEntityMarker.size());
  const auto third = second == std::string_view::npos
                         ? second
                         : text.find(kEntityMarker, second + kEntityMarker.size());
  if (first == std::string_view::npos || second == std::string_view::npos ||
      third != std::string_view::npos) {
    throw PreconditionError("marked text must contain exactly two [ENT] markers");
  }
  const auto inner = text.substr(first + kEntityMarker.size(), second - first - kEntityMarker.size());
  if (trim(inner).empty()) throw PreconditionError("marked mention is empty");
}

std::vector<std::vector<float>> Encoder::encode_batch(std::span<const MarkedText> batch) const {
  std::vector<std::vector<float>> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      out.push_back(encode(batch[i]));
    } catch (const Error& e) {
      throw BatchError(i, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t mock_encoder_seed(std::string_view text, std::string_view language, std::size_t dim) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  auto feed = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001B3ull;
  };
  for (char c : text) feed(static_cast<unsigned char>(c));
  feed(0xFF);
  for (char c : language) feed(static_cast<unsigned char>(c));
  const auto d = static_cast<std::uint64_t>(dim);
  for (int shift = 0; shift < 64; shift += 8) feed(static_cast<unsigned char>(d >> shift));
  return h;
}

MockEncoder::MockEncoder(std::size_t dim) : dim_(dim) {
  if (dim < 1) throw PreconditionError("encoder dim must be >= 1");
}

std::vector<float> MockEncoder::encode(const MarkedText& marked) const {
  validate_marked_text(marked.text);
  const std::uint64_t seed = mock_encoder_seed(marked.text, marked.language, dim_);
  std::vector<float> v(dim_);
  for (std::size_t j = 0; j < dim_; ++j) {
    // Top 24 bits give an exactly representable float in [0, 1).
    const auto bits = static_cast<std::uint32_t>(splitmix64(seed, j) >> 40);
    v[j] = static_cast<float>(bits) * (2.0f / 16777216.0f) - 1.0f;
  }
  return v;
}

// ---------------------------------------------------------------------------

PrecomputedEncoder::PrecomputedEncoder(EmbeddingMatrix matrix) : matrix_(std::move(matrix)) {
  matrix_.validate();
  for (std::size_t i = 0; i < matrix_.ids.size(); ++i) {
    if (!row_of_.emplace(matrix_.ids[i], i).second) {
      throw PreconditionError("duplicate precomputed key: " + matrix_.ids[i]);
    }
  }
}

PrecomputedEncoder PrecomputedEncoder::load(const std::string& vectors_path,
                                            const std::string& ids_path) {
  return PrecomputedEncoder(read_embeddings(vectors_path, ids_path));
}

std::vector<float> PrecomputedEncoder::encode(const MarkedText& marked) const {
  const std::string& key = marked.key.empty() ? marked.text : marked.key;
  const auto it = row_of_.find(key);
  if (it == row_of_.end()) {
    throw PreconditionError("precomputed encoder has no vector for key \"" + key + "\"");
  }
  const auto row = matrix_.row(it->second);
  return {row.begin(), row.end()};
}

// ---------------------------------------------------------------------------

std::vector<float> vector_from_json(const json& value, std::size_t dim) {
  if (!value.is_array()) throw FormatError("", 0, "embedding vector is not an array");
  if (value.size() != dim) {
    throw DimensionError("embedding has dimension " + std::to_string(value.size()) +
                         ", expected " + std::to_string(dim));
  }
  std::vector<float> out;
  out.reserve(dim);
  for (const auto& x : value) {
    if (!x.is_number()) throw FormatError("", 0, "embedding value is not a number");
    const auto f = static_cast<float>(x.get<double>());
    if (!std::isfinite(f)) throw FormatError("", 0, "embedding value is not finite");
    out.push_back(f);
  }
  return out;
}

struct HttpEncoder::Gate {
  explicit Gate(std::size_t limit) : slots(static_cast<std::ptrdiff_t>(limit)) {}
  std::counting_semaphore<1024> slots;
};

HttpEncoder::HttpEncoder(const std::string& endpoint, std::size_t dim)
    : HttpEncoder(endpoint, dim, Options{}) {}

HttpEncoder::HttpEncoder(const std::string& endpoint, std::size_t dim, Options options)
    : endpoint_(parse_endpoint(endpoint)), dim_(dim), options_(options) {
  if (dim < 1) throw PreconditionError("encoder dim must be >= 1");
  if (options_.max_inflight < 1 || options_.max_inflight > 1024) {
    throw PreconditionError("max_inflight must be within [1, 1024]");
  }
  gate_ = std::make_unique<Gate>(options_.max_inflight);
}

HttpEncoder::~HttpEncoder() = default;

json HttpEncoder::request(std::span<const MarkedText> batch) const {
  json items = json::array();
  for (const auto& m : batch) items.push_back({{"text", m.text}, {"language", m.language}});
  const std::string body = json{{"items", items}, {"dim", dim_}}.dump();

  gate_->slots.acquire();
  std::string reply;
  try {
    reply = with_retry(options_.retry,
                       [&] { return http_post_json(endpoint_, "/embed", body, options_.timeouts); });
  } catch (...) {
    gate_->slots.release();
    throw;
  }
  gate_->slots.release();

  json response;
  try {
    response = json::parse(reply);
  } catch (const json::parse_error& e) {
    throw FormatError(endpoint_.origin, 0, std::string("malformed /embed response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("vectors") || !response["vectors"].is_array()) {
    throw FormatError(endpoint_.origin, 0, "/embed response lacks a \"vectors\" array");
  }
  if (response.contains("dim") && response["dim"] != dim_) {
    throw DimensionError("/embed reported dim " + response["dim"].dump() + ", expected " +
                         std::to_string(dim_));
  }
  if (response["vectors"].size() != batch.size()) {
    throw FormatError(endpoint_.origin, 0,
                      "/embed returned " + std::to_string(response["vectors"].size()) +
                          " vectors for " + std::to_string(batch.size()) + " items");
  }
  return response["vectors"];
}

std::vector<float> HttpEncoder::encode(const MarkedText& marked) const {
  validate_marked_text(marked.text);
  const json vectors = request(std::span(&marked, 1));
  return vector_from_json(vectors[0], dim_);
}

std::vector<std::vector<float>> HttpEncoder::encode_batch(std::span<const MarkedText> batch) const {
  if (batch.empty()) return {};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      validate_marked_text(batch[i].text);
    } catch (const Error& e) {
      throw BatchError(i, e.what());
    }
  }
  const json vectors = request(batch);
  std::vector<std::vector<float>> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      out.push_back(vector_from_json(vectors[i], dim_));
    } catch (const Error& e) {
      throw BatchError(i, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config) {
  switch (config.backend) {
    case EncoderBackend::mock:
      return std::make_unique<MockEncoder>(config.dim);
    case EncoderBackend::precomputed: {
      auto encoder = std::make_unique<PrecomputedEncoder>(
          PrecomputedEncoder::load(config.vectors_path, config.ids_path));
      if (config.dim != 0 && encoder->dim() != config.dim) {
        throw DimensionError("precomputed vectors have dim " + std::to_string(encoder->dim()) +
                             ", config says " + std::to_string(config.dim));
      }
      return encoder;
    }
    case EncoderBackend::http:
      if (!config.endpoint || config.endpoint->empty()) {
        throw PreconditionError("http encoder backend requires an endpoint");
      }
      return std::make_unique<HttpEncoder>(
          *config.endpoint, config.dim, HttpEncoder::Options{config.max_inflight, {}, {}});
  }
  throw PreconditionError("unknown encoder backend");
}

}  // namespace mhel
