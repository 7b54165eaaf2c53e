#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhel/calibration.hpp"
#include "mhel/corpus_io.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

struct EvalPair {
  std::string mention_id;
  std::string gold;  // qid or "NIL"
  std::string pred;  // qid or "NIL"
  double top_score = 0.0;
};

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 2PR / (P + R), or 0 when P + R == 0.
double harmonic_f1(double precision, double recall);

struct MicroScores {
  std::size_t n = 0;
  std::size_t correct = 0;
  // NIL treated as an ordinary label; with one label per mention micro
  // P = R = F1 = accuracy.
  double accuracy_f1 = 0.0;
  // NIL predictions treated as abstentions.
  PrfScores link_only;
};

MicroScores micro_scores(std::span<const EvalPair> pairs);

struct NilReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

// NIL is the positive class.
NilReport nil_scores(std::span<const EvalPair> pairs);

struct CorrelationReport {
  double r_pb = 0.0;
  std::size_t n = 0;
  double t_stat = 0.0;
  double p_value = 1.0;  // two-sided, Student t with n - 2 df
};

// Point-biserial correlation between scores and a 0/1 indicator.
CorrelationReport point_biserial(std::span<const double> scores, std::span<const int> correct);

enum class ErrorRelation { false_, exact, close, related, broader, narrower };
inline constexpr std::size_t kErrorRelationCount = 6;
inline constexpr std::array<ErrorRelation, kErrorRelationCount> kErrorRelations = {
    ErrorRelation::false_,  ErrorRelation::exact,   ErrorRelation::close,
    ErrorRelation::related, ErrorRelation::broader, ErrorRelation::narrower};

const char* to_string(ErrorRelation relation);
std::optional<ErrorRelation> error_relation_from_string(std::string_view name);

struct ErrorAnnotation {
  std::string mention_id;
  ErrorRelation relation = ErrorRelation::false_;
  std::string dataset;
};

using RelationCounts = std::array<std::size_t, kErrorRelationCount>;

struct ErrorTally {
  std::map<std::string, RelationCounts> by_dataset;
  RelationCounts totals{};
  std::size_t total = 0;

  std::size_t count(ErrorRelation relation) const {
    return totals[static_cast<std::size_t>(relation)];
  }
};

ErrorTally tally_error_relations(std::span<const ErrorAnnotation> annotations);

// JSONL with mention_id, relation (lowercase class name) and dataset.
std::vector<ErrorAnnotation> read_error_annotations(const std::string& path);

std::vector<RecallPoint> retrieval_recall_report(std::span<const DevRetrievalRecord> records,
                                                 std::span<const int> k_steps);

// Joins predictions with gold mentions on mention_id. Every prediction needs a
// gold label and vice versa.
std::vector<EvalPair> join_predictions(std::span<const PredictionRecord> predictions,
                                       std::span<const MentionQuery> gold);

// Uses the gold_qid copied into each prediction line.
std::vector<EvalPair> pairs_from_predictions(std::span<const PredictionRecord> predictions);

json to_json(const MicroScores& scores);
json to_json(const NilReport& report);
json to_json(const CorrelationReport& report);
json to_json(const ErrorTally& tally);

std::string format_table(const MicroScores& scores);
std::string format_table(const NilReport& report);
std::string format_table(const CorrelationReport& report);
std::string format_table(const ErrorTally& tally);

}  // namespace mhel
