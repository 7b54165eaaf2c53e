#pragma once

#include <string>

namespace mhel {

// One k-NN result: an entity id with its raw inner-product score.
struct RetrievalHit {
  std::string qid;
  float score = 0.0f;
  int rank = 0;  // 1-based

  bool operator==(const RetrievalHit&) const = default;
};

}  // namespace mhel
