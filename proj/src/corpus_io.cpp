#include "mhel/corpus_io.hpp"

#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "mhel/error.hpp"

namespace mhel {

namespace {

bool is_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

std::size_t required_offset(const json& obj, const char* key, const std::string& path,
                            std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(path, line, std::string("missing field \"") + key + "\"");
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw FormatError(path, line, std::string("field \"") + key + "\" must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

}  // namespace

void validate_offsets(std::string_view text, std::size_t start, std::size_t end) {
  if (start >= end) {
    throw PreconditionError("empty or inverted span [" + std::to_string(start) + ", " +
                            std::to_string(end) + ")");
  }
  if (end > text.size()) {
    throw PreconditionError("span end " + std::to_string(end) + " beyond text length " +
                            std::to_string(text.size()));
  }
  if (!is_valid_utf8(text)) throw PreconditionError("text is not valid UTF-8");
  if (is_continuation(text[start]) || (end < text.size() && is_continuation(text[end]))) {
    throw PreconditionError("span offsets split a UTF-8 character");
  }
}

std::string mark_mention(std::string_view text, std::size_t start, std::size_t end) {
  validate_offsets(text, start, end);
  std::string out;
  out.reserve(text.size() + 12);
  out.append(text.substr(0, start));
  out.append("[ENT] ");
  out.append(text.substr(start, end - start));
  out.append(" [ENT]");
  out.append(text.substr(end));
  return out;
}

MentionQuery mention_from_json(const json& obj, const std::string& path, std::size_t line) {
  MentionQuery m;
  m.doc_id = required_string(obj, "doc_id", path, line);
  m.mention_id = required_string(obj, "mention_id", path, line);
  if (m.mention_id.empty()) throw FormatError(path, line, "empty mention_id");
  m.text = required_string(obj, "text", path, line);
  m.start = required_offset(obj, "start", path, line);
  m.end = required_offset(obj, "end", path, line);
  m.language = required_string(obj, "language", path, line);
  m.language_name = optional_string(obj, "language_name", path, line);
  m.document_date = optional_string(obj, "document_date", path, line);
  m.genre = optional_string(obj, "genre", path, line);
  if (obj.contains("gold_qid") && !obj["gold_qid"].is_null()) {
    m.gold_qid = required_string(obj, "gold_qid", path, line);
    if (m.gold_qid->empty()) throw FormatError(path, line, "empty gold_qid");
  }
  try {
    validate_offsets(m.text, m.start, m.end);
  } catch (const PreconditionError& e) {
    throw FormatError(path, line, e.what());
  }
  return m;
}

json mention_to_json(const MentionQuery& m) {
  json obj = {{"doc_id", m.doc_id},
              {"mention_id", m.mention_id},
              {"text", m.text},
              {"start", m.start},
              {"end", m.end},
              {"language", m.language},
              {"language_name", m.language_name},
              {"document_date", m.document_date},
              {"genre", m.genre}};
  if (m.gold_qid) obj["gold_qid"] = *m.gold_qid;
  return obj;
}

std::string manifest_path_for(const std::string& corpus_path) {
  return corpus_path + ".manifest.json";
}

json manifest_to_json(const CorpusManifest& manifest) {
  return {{"dataset", manifest.dataset},
          {"language", manifest.language},
          {"genre", manifest.genre},
          {"kb_snapshot", manifest.kb_snapshot}};
}

CorpusFile load_corpus(const std::string& path) {
  CorpusFile corpus;
  corpus.path = path;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    MentionQuery m = mention_from_json(obj, path, line);
    if (const auto [it, inserted] = seen.emplace(m.mention_id, line); !inserted) {
      throw FormatError(path, line,
                        "duplicate mention_id " + m.mention_id + " (first on line " +
                            std::to_string(it->second) + ")");
    }
    corpus.mentions.push_back(std::move(m));
  });

  const std::string sidecar = manifest_path_for(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream in(sidecar);
    const json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.is_object()) {
      throw FormatError(sidecar, 0, "manifest must be a JSON object");
    }
    corpus.manifest.dataset = optional_string(manifest, "dataset", sidecar, 0);
    corpus.manifest.language = optional_string(manifest, "language", sidecar, 0);
    corpus.manifest.genre = optional_string(manifest, "genre", sidecar, 0);
    corpus.manifest.kb_snapshot = optional_string(manifest, "kb_snapshot", sidecar, 0);
  } else {
    corpus.manifest.dataset = std::filesystem::path(path).stem().string();
    auto uniform = [&](auto field) {
      if (corpus.mentions.empty()) return std::string();
      const std::string& first = corpus.mentions.front().*field;
      for (const auto& m : corpus.mentions) {
        if (m.*field != first) return std::string("mixed");
      }
      return first;
    };
    corpus.manifest.language = uniform(&MentionQuery::language);
    corpus.manifest.genre = uniform(&MentionQuery::genre);
  }
  return corpus;
}

std::size_t write_corpus(const std::string& path, std::span<const MentionQuery> mentions) {
  std::string out;
  for (const auto& m : mentions) {
    out += canonical_dump(mention_to_json(m));
    out += '\n';
  }
  return write_text_file(path, out);
}

PredictionRecord to_prediction(const LinkDecision& d) {
  PredictionRecord r;
  r.mention_id = d.mention_id;
  r.doc_id = d.doc_id;
  r.pred_qid = d.predicted();
  r.route = to_string(d.route);
  if (d.top_score) r.top_score = static_cast<double>(*d.top_score);
  r.candidates_considered = d.candidates_considered;
  r.gold_qid = d.gold_qid;
  return r;
}

std::string prediction_line(const PredictionRecord& r) {
  json obj = {{"mention_id", r.mention_id},
              {"doc_id", r.doc_id},
              {"pred_qid", r.pred_qid},
              {"route", r.route},
              {"top_score", r.top_score ? json(*r.top_score) : json(nullptr)},
              {"candidates_considered", r.candidates_considered}};
  if (r.gold_qid) obj["gold_qid"] = *r.gold_qid;
  return canonical_dump(obj) + "\n";
}

std::size_t write_predictions(const std::string& path, std::span<const PredictionRecord> records) {
  std::string out;
  for (const auto& r : records) out += prediction_line(r);
  return write_text_file(path, out);
}

std::size_t write_predictions(const std::string& path, std::span<const LinkDecision> decisions) {
  std::string out;
  for (const auto& d : decisions) out += prediction_line(to_prediction(d));
  return write_text_file(path, out);
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::vector<PredictionRecord> out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    PredictionRecord r;
    r.mention_id = required_string(obj, "mention_id", path, line);
    r.doc_id = optional_string(obj, "doc_id", path, line);
    r.pred_qid = required_string(obj, "pred_qid", path, line);
    if (r.pred_qid.empty()) throw FormatError(path, line, "empty pred_qid");
    r.route = optional_string(obj, "route", path, line);
    if (obj.contains("top_score") && !obj["top_score"].is_null()) {
      if (!obj["top_score"].is_number()) throw FormatError(path, line, "top_score must be a number");
      r.top_score = obj["top_score"].get<double>();
    }
    if (obj.contains("candidates_considered")) {
      if (!obj["candidates_considered"].is_number_integer()) {
        throw FormatError(path, line, "candidates_considered must be an integer");
      }
      r.candidates_considered = obj["candidates_considered"].get<int>();
    }
    if (obj.contains("gold_qid") && !obj["gold_qid"].is_null()) {
      r.gold_qid = required_string(obj, "gold_qid", path, line);
    }
    if (const auto [it, inserted] = seen.emplace(r.mention_id, line); !inserted) {
      throw FormatError(path, line, "duplicate mention_id " + r.mention_id);
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::size_t write_report(const std::string& path, const json& report) {
  return write_text_file(path, canonical_dump(report) + "\n");
}

}  // namespace mhel
