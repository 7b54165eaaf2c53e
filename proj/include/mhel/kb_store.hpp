#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhel/http.hpp"
#include "mhel/jsonl.hpp"
#include "mhel/retrieval_hit.hpp"

namespace mhel {

// One knowledge-base entity and the metadata injected into prompts.
struct EntityRecord {
  std::string qid;
  std::map<std::string, std::string> labels;        // language code -> label
  std::map<std::string, std::string> descriptions;  // language code -> description
  std::optional<std::string> earliest_date;         // ISO-8601, kept verbatim
  std::optional<std::string> entity_type;

  bool operator==(const EntityRecord&) const = default;
};

// A retrieval hit joined with its KB metadata.
struct EnrichedCandidate {
  std::string qid;
  float score = 0.0f;
  std::string label;
  std::optional<std::string> description;
  std::optional<std::string> earliest_date;
  std::optional<std::string> entity_type;
  // Language whose label was used; empty when the label fell back to the qid.
  std::string label_language_used;

  bool operator==(const EnrichedCandidate&) const = default;
};

// Validation helpers shared by the importers.
bool is_language_code(std::string_view code);
bool is_iso_date(std::string_view date);

// Parses and validates one KB JSONL object. `qid_override` replaces a missing
// qid (remote responses are keyed by qid).
EntityRecord entity_from_json(const json& obj, const std::string& path, std::size_t line,
                              const std::string& qid_override = {});
json entity_to_json(const EntityRecord& record);

std::vector<EntityRecord> read_kb_jsonl(const std::string& path);
std::size_t write_kb_jsonl(const std::string& path, std::span<const EntityRecord> records);

// Label/description fallback: requested language, then "en", then the
// lexicographically first language present. Returns the language used, or
// nullopt when the map is empty.
std::optional<std::string> pick_language(const std::map<std::string, std::string>& by_language,
                                         const std::string& requested);

// Single-file entity store keyed by qid. Read-only once opened for reading;
// `get` and `enrich` are safe to call concurrently.
class KbStore {
 public:
  enum class Mode { read_only, read_write };

  static KbStore open(const std::string& path, Mode mode = Mode::read_only);

  KbStore(KbStore&&) noexcept;
  KbStore& operator=(KbStore&&) noexcept;
  ~KbStore();

  std::optional<EntityRecord> get(const std::string& qid) const;
  std::size_t size() const;
  const std::string& path() const;

  // Order, count and scores are preserved; missing entities get label = qid.
  std::vector<EnrichedCandidate> enrich(std::span<const RetrievalHit> candidates,
                                        const std::string& language) const;

  // Upserts records. For an existing qid, fields populated in the incoming
  // record replace the stored ones (label/description maps per language).
  // Returns the number of records written.
  std::size_t merge(std::span<const EntityRecord> records);

 private:
  friend struct KbImportResult import_kb(const std::string&, const std::string&);
  struct Impl;
  explicit KbStore(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

struct KbImportResult {
  KbStore store;
  std::size_t count;
};

// Builds a fresh store at `store_path` (replacing any existing file) from a
// KB JSONL file. Duplicate or missing qids are hard errors.
KbImportResult import_kb(const std::string& jsonl_path, const std::string& store_path);

struct RemoteFetchResult {
  std::vector<EntityRecord> records;
  std::vector<std::string> unresolved;
};

// GET {endpoint}?ids=Q1|Q2; the response is an object keyed by qid.
RemoteFetchResult fetch_remote_metadata(const std::vector<std::string>& qids,
                                        const std::string& endpoint,
                                        const RetryPolicy& retry = {},
                                        const HttpTimeouts& timeouts = {});

}  // namespace mhel
