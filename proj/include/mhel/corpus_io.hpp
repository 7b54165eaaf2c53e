#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhel/jsonl.hpp"
#include "mhel/pipeline.hpp"

namespace mhel {

struct CorpusManifest {
  std::string dataset;
  std::string language;
  std::string genre;
  std::string kb_snapshot;

  bool operator==(const CorpusManifest&) const = default;
};

struct CorpusFile {
  std::string path;
  std::vector<MentionQuery> mentions;
  CorpusManifest manifest;
};

// Throws PreconditionError unless 0 <= start < end <= len(text), the text is
// valid UTF-8 and both offsets fall on character boundaries.
void validate_offsets(std::string_view text, std::size_t start, std::size_t end);

// "Hello Paris today", 6, 11 -> "Hello [ENT] Paris [ENT] today".
std::string mark_mention(std::string_view text, std::size_t start, std::size_t end);

MentionQuery mention_from_json(const json& obj, const std::string& path, std::size_t line);
json mention_to_json(const MentionQuery& mention);

// Reads mention JSONL. The manifest comes from "<path>.manifest.json" when
// present; otherwise it is derived from the file name and the mentions.
CorpusFile load_corpus(const std::string& path);
std::size_t write_corpus(const std::string& path, std::span<const MentionQuery> mentions);

std::string manifest_path_for(const std::string& corpus_path);
json manifest_to_json(const CorpusManifest& manifest);

// One line of the prediction JSONL.
struct PredictionRecord {
  std::string mention_id;
  std::string doc_id;
  std::string pred_qid;  // qid or "NIL"
  std::string route;
  std::optional<double> top_score;
  int candidates_considered = 0;
  std::optional<std::string> gold_qid;

  bool operator==(const PredictionRecord&) const = default;
};

PredictionRecord to_prediction(const LinkDecision& decision);

// Sorted keys, six-decimal floats, LF line endings.
std::string prediction_line(const PredictionRecord& record);
std::size_t write_predictions(const std::string& path, std::span<const PredictionRecord> records);
std::size_t write_predictions(const std::string& path, std::span<const LinkDecision> decisions);
std::vector<PredictionRecord> read_predictions(const std::string& path);

// Canonical JSON report followed by a newline.
std::size_t write_report(const std::string& path, const json& report);

}  // namespace mhel
