#include "mhel/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>
#include <unordered_map>

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

namespace {

std::uint32_t decode_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void encode_u32(std::uint32_t v, unsigned char* p) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

// Strict ordering of hits: higher score first, then smaller qid.
bool ranks_before(float score_a, const std::string& id_a, float score_b, const std::string& id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

void check_query(const EmbeddingMatrix& matrix, std::span<const float> query, int k) {
  if (query.size() != matrix.dim) {
    throw DimensionError("query has dimension " + std::to_string(query.size()) +
                         ", index has " + std::to_string(matrix.dim));
  }
  for (std::size_t j = 0; j < query.size(); ++j) {
    if (!std::isfinite(query[j])) {
      throw PreconditionError("query value at column " + std::to_string(j) + " is not finite");
    }
  }
  if (k < 1) throw PreconditionError("k must be >= 1, got " + std::to_string(k));
}

}  // namespace

void EmbeddingMatrix::validate() const {
  if (dim < 1) throw PreconditionError("embedding dim must be >= 1");
  if (ids.size() != count) {
    throw PreconditionError("ids count " + std::to_string(ids.size()) + " != row count " +
                            std::to_string(count));
  }
  if (data.size() != static_cast<std::size_t>(count) * dim) {
    throw PreconditionError("data length does not equal count * dim");
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw PreconditionError("non-finite value in row " + std::to_string(i / dim));
    }
  }
}

EmbeddingMatrix read_embeddings(const std::string& vectors_path, const std::string& ids_path) {
  std::ifstream in(vectors_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + vectors_path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  constexpr std::size_t kHeader = 16;
  if (bytes.size() < kHeader) {
    throw FormatError(vectors_path, 0,
                      "truncated header at offset " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kVectorMagic, sizeof kVectorMagic) != 0) {
    throw FormatError(vectors_path, 0, "bad magic at offset 0 (expected MHELVEC1)");
  }
  EmbeddingMatrix m;
  m.count = decode_u32(bytes.data() + 8);
  m.dim = decode_u32(bytes.data() + 12);
  if (m.dim < 1) throw FormatError(vectors_path, 0, "dim must be >= 1 (offset 12)");
  const std::size_t values = static_cast<std::size_t>(m.count) * m.dim;
  const std::size_t expected = kHeader + values * 4;
  if (bytes.size() < expected) {
    throw FormatError(vectors_path, 0,
                      "truncated data: file ends at offset " + std::to_string(bytes.size()) +
                          ", expected " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) {
    throw FormatError(vectors_path, 0,
                      "trailing bytes after offset " + std::to_string(expected));
  }
  m.data.resize(values);
  for (std::size_t i = 0; i < values; ++i) {
    const std::size_t offset = kHeader + i * 4;
    const float value = std::bit_cast<float>(decode_u32(bytes.data() + offset));
    if (!std::isfinite(value)) {
      throw FormatError(vectors_path, 0,
                        "non-finite value in row " + std::to_string(i / m.dim) + " at offset " +
                            std::to_string(offset));
    }
    m.data[i] = value;
  }

  std::unordered_map<std::string, std::size_t> seen;
  std::size_t lines = 0;
  for_each_jsonl(ids_path, [&](const json& obj, std::size_t line) {
    ++lines;
    if (lines > m.count) {
      throw FormatError(ids_path, line,
                        "more ids than vector rows (" + std::to_string(m.count) + ")");
    }
    std::string qid = required_string(obj, "qid", ids_path, line);
    if (qid.empty()) throw FormatError(ids_path, line, "empty qid");
    if (const auto [it, inserted] = seen.emplace(qid, line); !inserted) {
      throw FormatError(ids_path, line,
                        "duplicate qid " + qid + " (also on line " + std::to_string(it->second) +
                            ")");
    }
    m.ids.push_back(std::move(qid));
  });
  if (m.ids.size() != m.count) {
    throw FormatError(ids_path, lines,
                      "ids file has " + std::to_string(m.ids.size()) + " entries, header count is " +
                          std::to_string(m.count));
  }
  return m;
}

void write_embeddings(const EmbeddingMatrix& matrix, const std::string& vectors_path,
                      const std::string& ids_path) {
  matrix.validate();
  std::string out(16 + matrix.data.size() * 4, '\0');
  auto* p = reinterpret_cast<unsigned char*>(out.data());
  std::memcpy(p, kVectorMagic, sizeof kVectorMagic);
  encode_u32(matrix.count, p + 8);
  encode_u32(matrix.dim, p + 12);
  for (std::size_t i = 0; i < matrix.data.size(); ++i) {
    encode_u32(std::bit_cast<std::uint32_t>(matrix.data[i]), p + 16 + i * 4);
  }
  write_text_file(vectors_path, out);

  std::string ids;
  for (const auto& id : matrix.ids) ids += json{{"qid", id}}.dump() + "\n";
  write_text_file(ids_path, ids);
}

float inner_product(std::span<const float> a, std::span<const float> b) {
  float sum = 0.0f;
  for (std::size_t j = 0; j < a.size(); ++j) sum += a[j] * b[j];
  return sum;
}

std::vector<RetrievalHit> brute_force_search(const EmbeddingMatrix& matrix,
                                             std::span<const float> query, int k) {
  check_query(matrix, query, k);
  std::vector<RetrievalHit> all;
  all.reserve(matrix.count);
  for (std::size_t i = 0; i < matrix.count; ++i) {
    all.push_back({matrix.ids[i], inner_product(matrix.row(i), query), 0});
  }
  std::sort(all.begin(), all.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    return ranks_before(a.score, a.qid, b.score, b.qid);
  });
  all.resize(std::min<std::size_t>(all.size(), static_cast<std::size_t>(k)));
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i + 1);
  return all;
}

VectorIndex::VectorIndex(EmbeddingMatrix matrix) : matrix_(std::move(matrix)) {
  matrix_.validate();
  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < matrix_.ids.size(); ++i) {
    if (!seen.emplace(matrix_.ids[i], i).second) {
      throw PreconditionError("duplicate id in index: " + matrix_.ids[i]);
    }
  }
}

VectorIndex VectorIndex::load(const std::string& vectors_path, const std::string& ids_path) {
  return VectorIndex(read_embeddings(vectors_path, ids_path));
}

std::vector<RetrievalHit> VectorIndex::search(std::span<const float> query, int k) const {
  check_query(matrix_, query, k);
  const std::size_t keep = std::min<std::size_t>(matrix_.count, static_cast<std::size_t>(k));
  if (keep == 0) return {};

  struct Scored {
    float score;
    std::uint32_t row;
  };
  const auto& ids = matrix_.ids;
  // Heap ordered so the front is the weakest kept hit.
  auto better = [&ids](const Scored& a, const Scored& b) {
    return ranks_before(a.score, ids[a.row], b.score, ids[b.row]);
  };
  std::vector<Scored> heap;
  heap.reserve(keep);
  for (std::uint32_t i = 0; i < matrix_.count; ++i) {
    const Scored s{inner_product(matrix_.row(i), query), i};
    if (heap.size() < keep) {
      heap.push_back(s);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(s, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = s;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), better);

  std::vector<RetrievalHit> hits;
  hits.reserve(heap.size());
  for (std::size_t r = 0; r < heap.size(); ++r) {
    hits.push_back({ids[heap[r].row], heap[r].score, static_cast<int>(r + 1)});
  }
  return hits;
}

}  // namespace mhel
