#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mhel/retrieval_hit.hpp"

namespace mhel {

// Row-major float32 matrix with one id per row.
struct EmbeddingMatrix {
  std::uint32_t count = 0;
  std::uint32_t dim = 0;
  std::vector<float> data;  // count * dim
  std::vector<std::string> ids;

  std::span<const float> row(std::size_t i) const {
    return {data.data() + i * dim, dim};
  }

  // Throws PreconditionError when sizes disagree or a value is non-finite.
  void validate() const;

  bool operator==(const EmbeddingMatrix&) const = default;
};

// Vector file: "MHELVEC1", u32 count, u32 dim (little-endian), then
// count*dim little-endian binary32 values, row-major.
inline constexpr char kVectorMagic[8] = {'M', 'H', 'E', 'L', 'V', 'E', 'C', '1'};

// Reads the vector file and the ids JSONL (one {"qid": ...} per line).
EmbeddingMatrix read_embeddings(const std::string& vectors_path, const std::string& ids_path);
void write_embeddings(const EmbeddingMatrix& matrix, const std::string& vectors_path,
                      const std::string& ids_path);

// Dot product accumulated in float, ascending column order. Both search
// routines use it so their scores agree bit-for-bit.
float inner_product(std::span<const float> a, std::span<const float> b);

// Reference k-NN: scores every row, sorts all of them, keeps min(k, count).
std::vector<RetrievalHit> brute_force_search(const EmbeddingMatrix& matrix,
                                             std::span<const float> query, int k);

// Immutable exact inner-product index. `search` is safe to call concurrently.
class VectorIndex {
 public:
  explicit VectorIndex(EmbeddingMatrix matrix);

  static VectorIndex load(const std::string& vectors_path, const std::string& ids_path);

  std::size_t count() const { return matrix_.count; }
  std::size_t dim() const { return matrix_.dim; }
  const EmbeddingMatrix& matrix() const { return matrix_; }

  // Top-k by score descending, ties by qid ascending; min(k, count) hits.
  std::vector<RetrievalHit> search(std::span<const float> query, int k) const;

 private:
  EmbeddingMatrix matrix_;
};

}  // namespace mhel
