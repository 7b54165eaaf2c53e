#include "mhel/kb_store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <mutex>
#include <unordered_map>

#include "mhel/error.hpp"

namespace mhel {

bool is_language_code(std::string_view code) {
  if (code.size() < 2 || code.size() > 8) return false;
  return std::all_of(code.begin(), code.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_iso_date(std::string_view date) {
  std::size_t i = 0;
  if (i < date.size() && (date[i] == '+' || date[i] == '-')) ++i;
  const std::size_t year_start = i;
  while (i < date.size() && std::isdigit(static_cast<unsigned char>(date[i]))) ++i;
  if (i - year_start < 4 || i - year_start > 12) return false;
  const long long year = std::stoll(std::string(date.substr(year_start, i - year_start)));
  if (i == date.size()) return true;

  auto two_digits = [&](int& out) {
    if (i + 3 > date.size() || date[i] != '-' ||
        !std::isdigit(static_cast<unsigned char>(date[i + 1])) ||
        !std::isdigit(static_cast<unsigned char>(date[i + 2]))) {
      return false;
    }
    out = (date[i + 1] - '0') * 10 + (date[i + 2] - '0');
    i += 3;
    return true;
  };
  int month = 0;
  if (!two_digits(month) || month < 1 || month > 12) return false;
  if (i == date.size()) return true;
  int day = 0;
  if (!two_digits(day) || i != date.size()) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  const int limit = kDays[month - 1] + (month == 2 && leap ? 1 : 0);
  return day >= 1 && day <= limit;
}

namespace {

std::map<std::string, std::string> language_map(const json& obj, const char* key,
                                                 const std::string& path, std::size_t line) {
  std::map<std::string, std::string> out;
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_object()) {
    throw FormatError(path, line, std::string("field \"") + key + "\" must be an object");
  }
  for (const auto& [lang, value] : it->items()) {
    if (!is_language_code(lang)) {
      throw FormatError(path, line, "invalid language code \"" + lang + "\" in " + key);
    }
    if (!value.is_string()) {
      throw FormatError(path, line, std::string(key) + "." + lang + " must be a string");
    }
    out.emplace(lang, value.get<std::string>());
  }
  return out;
}

std::optional<std::string> maybe_string(const json& obj, const char* key, const std::string& path,
                                        std::size_t line) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return optional_string(obj, key, path, line);
}

}  // namespace

EntityRecord entity_from_json(const json& obj, const std::string& path, std::size_t line,
                              const std::string& qid_override) {
  EntityRecord record;
  if (!qid_override.empty() && (!obj.contains("qid") || obj.at("qid").is_null())) {
    record.qid = qid_override;
  } else {
    record.qid = required_string(obj, "qid", path, line);
  }
  if (record.qid.empty()) throw FormatError(path, line, "empty \"qid\"");
  record.labels = language_map(obj, "labels", path, line);
  record.descriptions = language_map(obj, "descriptions", path, line);
  record.earliest_date = maybe_string(obj, "earliest_date", path, line);
  if (record.earliest_date && !is_iso_date(*record.earliest_date)) {
    throw FormatError(path, line, "earliest_date is not an ISO-8601 date: " + *record.earliest_date);
  }
  record.entity_type = maybe_string(obj, "entity_type", path, line);
  return record;
}

json entity_to_json(const EntityRecord& record) {
  json obj = {{"qid", record.qid}};
  if (!record.labels.empty()) obj["labels"] = record.labels;
  if (!record.descriptions.empty()) obj["descriptions"] = record.descriptions;
  if (record.earliest_date) obj["earliest_date"] = *record.earliest_date;
  if (record.entity_type) obj["entity_type"] = *record.entity_type;
  return obj;
}

std::vector<EntityRecord> read_kb_jsonl(const std::string& path) {
  std::vector<EntityRecord> records;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_jsonl(path, [&](const json& obj, std::size_t line) {
    EntityRecord record = entity_from_json(obj, path, line);
    const auto [it, inserted] = seen.emplace(record.qid, line);
    if (!inserted) {
      throw FormatError(path, line,
                        "duplicate qid " + record.qid + " (first seen on line " +
                            std::to_string(it->second) + ", again on line " +
                            std::to_string(line) + ")");
    }
    records.push_back(std::move(record));
  });
  return records;
}

std::size_t write_kb_jsonl(const std::string& path, std::span<const EntityRecord> records) {
  std::string out;
  for (const auto& record : records) {
    out += canonical_dump(entity_to_json(record));
    out += '\n';
  }
  return write_text_file(path, out);
}

std::optional<std::string> pick_language(const std::map<std::string, std::string>& by_language,
                                         const std::string& requested) {
  if (by_language.empty()) return std::nullopt;
  if (by_language.contains(requested)) return requested;
  if (by_language.contains("en")) return std::string("en");
  return by_language.begin()->first;
}

// ---------------------------------------------------------------------------
// SQLite-backed storage.

namespace {

struct DbCloser {
  void operator()(sqlite3* db) const { sqlite3_close(db); }
};
struct StmtFinalizer {
  void operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }
};
using Db = std::unique_ptr<sqlite3, DbCloser>;
using Stmt = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

void check(sqlite3* db, int rc, const std::string& what) {
  if (rc != SQLITE_OK && rc != SQLITE_DONE && rc != SQLITE_ROW) {
    throw IoError(what + ": " + sqlite3_errmsg(db));
  }
}

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : "unknown";
    sqlite3_free(err);
    throw IoError(std::string("sqlite: ") + message);
  }
}

Stmt prepare(sqlite3* db, const char* sql) {
  sqlite3_stmt* raw = nullptr;
  check(db, sqlite3_prepare_v2(db, sql, -1, &raw, nullptr), "prepare");
  return Stmt(raw);
}

void bind_text(sqlite3_stmt* stmt, int index, const std::string& value) {
  sqlite3_bind_text(stmt, index, value.data(), static_cast<int>(value.size()), SQLITE_TRANSIENT);
}

void bind_optional(sqlite3_stmt* stmt, int index, const std::optional<std::string>& value) {
  if (value) {
    bind_text(stmt, index, *value);
  } else {
    sqlite3_bind_null(stmt, index);
  }
}

std::optional<std::string> column_optional(sqlite3_stmt* stmt, int index) {
  if (sqlite3_column_type(stmt, index) == SQLITE_NULL) return std::nullopt;
  const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, index));
  return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, index)));
}

constexpr const char* kSchema =
    "CREATE TABLE IF NOT EXISTS entity ("
    " qid TEXT PRIMARY KEY NOT NULL,"
    " labels TEXT NOT NULL,"
    " descriptions TEXT NOT NULL,"
    " earliest_date TEXT,"
    " entity_type TEXT"
    ") WITHOUT ROWID;";

constexpr const char* kUpsert =
    "INSERT OR REPLACE INTO entity(qid, labels, descriptions, earliest_date, entity_type)"
    " VALUES (?1, ?2, ?3, ?4, ?5);";

constexpr const char* kSelect =
    "SELECT labels, descriptions, earliest_date, entity_type FROM entity WHERE qid = ?1;";

}  // namespace

struct KbStore::Impl {
  std::string path;
  Db db;
  Stmt select;
  mutable std::mutex mutex;  // guards `select`

  std::optional<EntityRecord> lookup(const std::string& qid) const {
    if (qid.empty()) return std::nullopt;
    std::lock_guard lock(mutex);
    sqlite3_stmt* stmt = select.get();
    sqlite3_reset(stmt);
    sqlite3_clear_bindings(stmt);
    bind_text(stmt, 1, qid);
    const int rc = sqlite3_step(stmt);
    check(db.get(), rc, "lookup " + qid);
    if (rc != SQLITE_ROW) return std::nullopt;
    EntityRecord record;
    record.qid = qid;
    record.labels = json::parse(*column_optional(stmt, 0)).get<std::map<std::string, std::string>>();
    record.descriptions =
        json::parse(*column_optional(stmt, 1)).get<std::map<std::string, std::string>>();
    record.earliest_date = column_optional(stmt, 2);
    record.entity_type = column_optional(stmt, 3);
    return record;
  }

  void insert_all(std::span<const EntityRecord> records) {
    exec(db.get(), "BEGIN IMMEDIATE;");
    try {
      Stmt upsert = prepare(db.get(), kUpsert);
      for (const auto& record : records) {
        sqlite3_reset(upsert.get());
        sqlite3_clear_bindings(upsert.get());
        bind_text(upsert.get(), 1, record.qid);
        bind_text(upsert.get(), 2, json(record.labels).dump());
        bind_text(upsert.get(), 3, json(record.descriptions).dump());
        bind_optional(upsert.get(), 4, record.earliest_date);
        bind_optional(upsert.get(), 5, record.entity_type);
        check(db.get(), sqlite3_step(upsert.get()), "insert " + record.qid);
      }
      exec(db.get(), "COMMIT;");
    } catch (...) {
      sqlite3_exec(db.get(), "ROLLBACK;", nullptr, nullptr, nullptr);
      throw;
    }
  }
};

KbStore::KbStore(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
KbStore::KbStore(KbStore&&) noexcept = default;
KbStore& KbStore::operator=(KbStore&&) noexcept = default;
KbStore::~KbStore() = default;

KbStore KbStore::open(const std::string& path, Mode mode) {
  if (mode == Mode::read_only && !std::filesystem::exists(path)) {
    throw IoError("KB store not found: " + path);
  }
  const int flags = mode == Mode::read_only
                        ? SQLITE_OPEN_READONLY | SQLITE_OPEN_FULLMUTEX
                        : SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.c_str(), &raw, flags, nullptr);
  Db db(raw);
  if (rc != SQLITE_OK) {
    throw IoError("cannot open KB store " + path + ": " +
                  (raw ? sqlite3_errmsg(raw) : "out of memory"));
  }
  if (mode == Mode::read_write) exec(db.get(), kSchema);
  auto impl = std::make_unique<Impl>();
  impl->path = path;
  impl->select = prepare(db.get(), kSelect);
  impl->db = std::move(db);
  return KbStore(std::move(impl));
}

std::optional<EntityRecord> KbStore::get(const std::string& qid) const {
  return impl_->lookup(qid);
}

std::size_t KbStore::size() const {
  std::lock_guard lock(impl_->mutex);
  Stmt count = prepare(impl_->db.get(), "SELECT COUNT(*) FROM entity;");
  check(impl_->db.get(), sqlite3_step(count.get()), "count");
  return static_cast<std::size_t>(sqlite3_column_int64(count.get(), 0));
}

const std::string& KbStore::path() const { return impl_->path; }

std::vector<EnrichedCandidate> KbStore::enrich(std::span<const RetrievalHit> candidates,
                                               const std::string& language) const {
  std::vector<EnrichedCandidate> out;
  out.reserve(candidates.size());
  for (const auto& hit : candidates) {
    EnrichedCandidate c;
    c.qid = hit.qid;
    c.score = hit.score;
    c.label = hit.qid;
    if (auto record = impl_->lookup(hit.qid)) {
      if (auto lang = pick_language(record->labels, language)) {
        c.label = record->labels.at(*lang);
        c.label_language_used = *lang;
      }
      if (auto lang = pick_language(record->descriptions, language)) {
        c.description = record->descriptions.at(*lang);
      }
      c.earliest_date = std::move(record->earliest_date);
      c.entity_type = std::move(record->entity_type);
    }
    // An empty stored label still has to yield a usable name.
    if (c.label.empty()) {
      c.label = hit.qid;
      c.label_language_used.clear();
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::size_t KbStore::merge(std::span<const EntityRecord> records) {
  std::vector<EntityRecord> merged;
  merged.reserve(records.size());
  for (const auto& incoming : records) {
    EntityRecord record = impl_->lookup(incoming.qid).value_or(EntityRecord{.qid = incoming.qid, .labels = {}, .descriptions = {}, .earliest_date = {}, .entity_type = {}});
    for (const auto& [lang, label] : incoming.labels) record.labels[lang] = label;
    for (const auto& [lang, text] : incoming.descriptions) record.descriptions[lang] = text;
    if (incoming.earliest_date) record.earliest_date = incoming.earliest_date;
    if (incoming.entity_type) record.entity_type = incoming.entity_type;
    merged.push_back(std::move(record));
  }
  impl_->insert_all(merged);
  return merged.size();
}

KbImportResult import_kb(const std::string& jsonl_path, const std::string& store_path) {
  const auto records = read_kb_jsonl(jsonl_path);
  std::error_code ec;
  std::filesystem::remove(store_path, ec);
  KbStore store = KbStore::open(store_path, KbStore::Mode::read_write);
  store.impl_->insert_all(records);
  return {std::move(store), records.size()};
}

RemoteFetchResult fetch_remote_metadata(const std::vector<std::string>& qids,
                                        const std::string& endpoint, const RetryPolicy& retry,
                                        const HttpTimeouts& timeouts) {
  if (qids.empty()) throw PreconditionError("fetch_remote_metadata: empty qid list");
  const Endpoint ep = parse_endpoint(endpoint);
  std::string joined;
  for (const auto& qid : qids) {
    if (!joined.empty()) joined += '|';
    joined += qid;
  }
  const std::string path = (ep.base_path.empty() ? "/" : ep.base_path) + "?ids=" + url_encode(joined);
  const std::string body = with_retry(retry, [&] { return http_get(ep, path, timeouts); });

  json response;
  try {
    response = json::parse(body);
  } catch (const json::parse_error& e) {
    throw FormatError(endpoint, 0, std::string("malformed metadata response: ") + e.what());
  }
  if (!response.is_object()) throw FormatError(endpoint, 0, "metadata response is not an object");

  RemoteFetchResult result;
  for (const auto& qid : qids) {
    const auto it = response.find(qid);
    if (it == response.end() || !it->is_object()) {
      result.unresolved.push_back(qid);
      continue;
    }
    EntityRecord record = entity_from_json(*it, endpoint, 0, qid);
    if (record.qid != qid) {
      throw FormatError(endpoint, 0, "response entry " + qid + " carries qid " + record.qid);
    }
    result.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace mhel
