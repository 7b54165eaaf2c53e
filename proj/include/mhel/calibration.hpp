#pragma once

#include <span>
#include <string>
#include <vector>

#include "mhel/retrieval_hit.hpp"

namespace mhel {

// Retrieval output for one development mention.
struct DevRetrievalRecord {
  std::string mention_id;
  std::string gold_qid;  // "NIL" allowed
  std::vector<RetrievalHit> hits;  // descending by score

  bool operator==(const DevRetrievalRecord&) const = default;
};

struct CalibrationConfig {
  std::vector<int> k_steps{10, 20, 30, 40, 50};
  double epsilon = 0.01;

  void validate() const;
};

// Which retrievals count as correct when collecting threshold scores.
enum class CorrectnessRule {
  rank1,        // rank-1 hit equals gold; its score is collected
  gold_in_hits  // gold anywhere in the hit list; the gold hit's score is collected
};

// Median of the collected scores (even count: mean of the middle two).
double calibrate_threshold(std::span<const DevRetrievalRecord> records,
                           CorrectnessRule rule = CorrectnessRule::rank1);

// Fraction of non-NIL records whose gold id is among the first k hits.
double recall_at_k(std::span<const DevRetrievalRecord> records, int k);

struct RecallPoint {
  int k;
  double recall;
};

std::vector<RecallPoint> recall_curve(std::span<const DevRetrievalRecord> records,
                                      std::span<const int> k_steps);

// Smallest step k_i with R(k_{i+1}) - R(k_i) < epsilon; the last step when
// every increment is significant.
int select_block_size(std::span<const DevRetrievalRecord> records,
                      const CalibrationConfig& config = {});

// Same rule applied to an already computed curve.
int select_block_size(std::span<const RecallPoint> curve, double epsilon);

// Dev-retrieval JSONL: {"mention_id", "gold_qid", "hits": [{"qid", "score"}, ...]}.
std::vector<DevRetrievalRecord> read_dev_retrievals(const std::string& path);
std::size_t write_dev_retrievals(const std::string& path,
                                 std::span<const DevRetrievalRecord> records);

}  // namespace mhel
