#include "mhel/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

namespace {

constexpr std::string_view kNilLabel = "NIL";

}  // namespace

void CalibrationConfig::validate() const {
  if (k_steps.size() < 2) throw PreconditionError("block-size selection needs at least two k steps");
  for (std::size_t i = 0; i < k_steps.size(); ++i) {
    if (k_steps[i] < 1) throw PreconditionError("k steps must be >= 1");
    if (i > 0 && k_steps[i] <= k_steps[i - 1]) {
      throw PreconditionError("k steps must be strictly increasing");
    }
  }
  if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be > 0");
}

double calibrate_threshold(std::span<const DevRetrievalRecord> records, CorrectnessRule rule) {
  std::vector<double> scores;
  for (const auto& r : records) {
    if (r.hits.empty() || r.gold_qid == kNilLabel) continue;
    if (rule == CorrectnessRule::rank1) {
      if (r.hits.front().qid == r.gold_qid) scores.push_back(r.hits.front().score);
    } else {
      const auto it = std::find_if(r.hits.begin(), r.hits.end(),
                                   [&](const RetrievalHit& h) { return h.qid == r.gold_qid; });
      if (it != r.hits.end()) scores.push_back(it->score);
    }
  }
  if (scores.empty()) {
    throw PreconditionError("threshold undefined: no correct predictions in the dev set");
  }
  std::sort(scores.begin(), scores.end());
  const std::size_t n = scores.size();
  if (n % 2 == 1) return scores[n / 2];
  return (scores[n / 2 - 1] + scores[n / 2]) / 2.0;
}

double recall_at_k(std::span<const DevRetrievalRecord> records, int k) {
  if (k < 1) throw PreconditionError("k must be >= 1");
  std::size_t total = 0;
  std::size_t found = 0;
  for (const auto& r : records) {
    if (r.gold_qid == kNilLabel) continue;
    ++total;
    const std::size_t depth = std::min(r.hits.size(), static_cast<std::size_t>(k));
    const auto end = r.hits.begin() + static_cast<std::ptrdiff_t>(depth);
    if (std::any_of(r.hits.begin(), end, [&](const RetrievalHit& h) { return h.qid == r.gold_qid; })) {
      ++found;
    }
  }
  if (total == 0) throw PreconditionError("recall undefined: every dev record is NIL");
  return static_cast<double>(found) / static_cast<double>(total);
}

std::vector<RecallPoint> recall_curve(std::span<const DevRetrievalRecord> records,
                                      std::span<const int> k_steps) {
  std::vector<RecallPoint> curve;
  curve.reserve(k_steps.size());
  for (int k : k_steps) curve.push_back({k, recall_at_k(records, k)});
  return curve;
}

int select_block_size(std::span<const RecallPoint> curve, double epsilon) {
  if (curve.size() < 2) throw PreconditionError("block-size selection needs at least two k steps");
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    if (curve[i + 1].recall - curve[i].recall < epsilon) return curve[i].k;
  }
  return curve.back().k;
}

int select_block_size(std::span<const DevRetrievalRecord> records,
                      const CalibrationConfig& config) {
  config.validate();
  const auto curve = recall_curve(records, config.k_steps);
  return select_block_size(curve, config.epsilon);
}

std::vector<DevRetrievalRecord> read_dev_retrievals(const std::string& path) {
  std::vector<DevRetrievalRecord> records;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    DevRetrievalRecord r;
    r.mention_id = required_string(obj, "mention_id", path, line);
    r.gold_qid = required_string(obj, "gold_qid", path, line);
    if (r.gold_qid.empty()) throw FormatError(path, line, "empty gold_qid");
    const auto hits = obj.find("hits");
    if (hits == obj.end() || !hits->is_array()) throw FormatError(path, line, "missing \"hits\" array");
    for (const auto& h : *hits) {
      if (!h.is_object()) throw FormatError(path, line, "hit must be an object");
      RetrievalHit hit;
      hit.qid = required_string(h, "qid", path, line);
      if (!h.contains("score") || !h["score"].is_number()) {
        throw FormatError(path, line, "hit score must be a number");
      }
      hit.score = h["score"].get<float>();
      if (!std::isfinite(hit.score)) throw FormatError(path, line, "hit score must be finite");
      if (!r.hits.empty() && hit.score > r.hits.back().score) {
        throw FormatError(path, line, "hits are not sorted by descending score");
      }
      hit.rank = static_cast<int>(r.hits.size() + 1);
      r.hits.push_back(std::move(hit));
    }
    records.push_back(std::move(r));
  });
  return records;
}

std::size_t write_dev_retrievals(const std::string& path,
                                 std::span<const DevRetrievalRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json hits = json::array();
    for (const auto& h : r.hits) hits.push_back({{"qid", h.qid}, {"score", h.score}});
    out += json{{"mention_id", r.mention_id}, {"gold_qid", r.gold_qid}, {"hits", hits}}.dump();
    out += '\n';
  }
  return write_text_file(path, out);
}

}  // namespace mhel
