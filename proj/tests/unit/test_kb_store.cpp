#include <filesystem>

#include "doctest.h"
#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"
#include "mhel/kb_store.hpp"
#include "mock_server.hpp"
#include "synthetic.hpp"

using namespace mhel;
namespace fs = std::filesystem;

namespace {

std::string write_lines(const fs::path& dir, const std::string& name, const std::string& body) {
  const auto path = (dir / name).string();
  write_text_file(path, body);
  return path;
}

KbStore sample_store(const fs::path& dir) {
  const auto jsonl = write_lines(
      dir, "kb.jsonl",
      R"({"qid":"Q7235","labels":{"de":"Sophokles","en":"Sophocles"},"descriptions":{"en":"Greek tragedian"},"earliest_date":"-0497","entity_type":"person"})"
      "\n"
      R"({"qid":"Q3587592","labels":{"fr":"Électre"}})"
      "\n"
      R"({"qid":"Q733444","labels":{"it":"Elettra","es":"Electra"},"descriptions":{"fr":"personnage"}})"
      "\n");
  return import_kb(jsonl, (dir / "kb.sqlite").string()).store;
}

}  // namespace

TEST_SUITE("kb_store") {
  TEST_CASE("import counts lines and get returns the stored record") {
    const auto dir = testkit::scratch_dir("kb");
    auto store = sample_store(dir);
    CHECK(store.size() == 3);
    const auto rec = store.get("Q7235");
    REQUIRE(rec);
    CHECK(rec->labels.at("en") == "Sophocles");
    CHECK(rec->earliest_date == "-0497");
    CHECK_FALSE(store.get("Q0"));
    CHECK_FALSE(store.get(""));
    fs::remove_all(dir);
  }

  TEST_CASE("duplicate qid names both lines") {
    const auto dir = testkit::scratch_dir("kb");
    const auto path = write_lines(dir, "dup.jsonl", "{\"qid\":\"Q1\"}\n\n{\"qid\":\"Q1\"}\n");
    try {
      import_kb(path, (dir / "x.sqlite").string());
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 1") != std::string::npos);
      CHECK(e.line() == 3);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("missing or empty qid and malformed lines carry line numbers") {
    const auto dir = testkit::scratch_dir("kb");
    const auto missing = write_lines(dir, "m.jsonl", "{\"qid\":\"Q1\"}\n{\"labels\":{\"en\":\"x\"}}\n");
    CHECK_THROWS_AS(read_kb_jsonl(missing), FormatError);
    try {
      read_kb_jsonl(missing);
    } catch (const FormatError& e) {
      CHECK(e.line() == 2);
    }
    const auto empty = write_lines(dir, "e.jsonl", "{\"qid\":\"\"}\n");
    CHECK_THROWS_AS(read_kb_jsonl(empty), FormatError);
    const auto broken = write_lines(dir, "b.jsonl", "{\"qid\":\"Q1\"\n");
    CHECK_THROWS_AS(read_kb_jsonl(broken), FormatError);
    const auto bad_lang = write_lines(dir, "l.jsonl", "{\"qid\":\"Q1\",\"labels\":{\"EN\":\"x\"}}\n");
    CHECK_THROWS_AS(read_kb_jsonl(bad_lang), FormatError);
    const auto bad_date = write_lines(dir, "d.jsonl", "{\"qid\":\"Q1\",\"earliest_date\":\"1999-02-30\"}\n");
    CHECK_THROWS_AS(read_kb_jsonl(bad_date), FormatError);
    fs::remove_all(dir);
  }

  TEST_CASE("ISO date validation") {
    CHECK(is_iso_date("1865"));
    CHECK(is_iso_date("-0497"));
    CHECK(is_iso_date("+1865-02-28"));
    CHECK(is_iso_date("2000-02-29"));
    CHECK_FALSE(is_iso_date("1900-02-29"));
    CHECK_FALSE(is_iso_date("1865-13"));
    CHECK_FALSE(is_iso_date("65"));
    CHECK_FALSE(is_iso_date("1865/02/01"));
    CHECK_FALSE(is_iso_date(""));
  }

  TEST_CASE("language codes are lowercase primary subtags") {
    CHECK(is_language_code("de"));
    CHECK(is_language_code("fi"));
    CHECK_FALSE(is_language_code("DE"));
    CHECK_FALSE(is_language_code("en-GB"));
    CHECK_FALSE(is_language_code("e"));
  }

  TEST_CASE("enrich follows the label fallback chain") {
    const auto dir = testkit::scratch_dir("kb");
    auto store = sample_store(dir);
    const std::vector<RetrievalHit> hits = {
        {"Q7235", 22.5f, 1}, {"Q3587592", 21.0f, 2}, {"Q733444", 20.0f, 3}, {"Q99", 1.5f, 4}};
    const auto out = store.enrich(hits, "de");
    REQUIRE(out.size() == 4);
    CHECK(out[0].label == "Sophokles");
    CHECK(out[0].label_language_used == "de");
    CHECK(out[0].description == "Greek tragedian");  // de missing -> en
    CHECK(out[1].label == "Électre");
    CHECK(out[1].label_language_used == "fr");
    CHECK_FALSE(out[1].description);
    CHECK(out[2].label == "Electra");  // "es" sorts before "it"
    CHECK(out[2].label_language_used == "es");
    CHECK(out[2].description == "personnage");
    CHECK(out[3].label == "Q99");
    CHECK(out[3].label_language_used.empty());
    CHECK_FALSE(out[3].description);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      CHECK(out[i].qid == hits[i].qid);
      CHECK(out[i].score == hits[i].score);
      CHECK_FALSE(out[i].label.empty());
    }
    fs::remove_all(dir);
  }

  TEST_CASE("round trip through the store is field-identical") {
    const auto dir = testkit::scratch_dir("kb");
    std::vector<EntityRecord> records;
    for (int i = 0; i < 30; ++i) {
      EntityRecord e;
      e.qid = "Q" + std::to_string(i + 1);
      if (i % 2) e.labels["en"] = "label " + std::to_string(i);
      if (i % 3) e.labels["fr"] = "étiquette ✓ " + std::to_string(i);
      if (i % 4) e.descriptions["de"] = "Beschreibung";
      if (i % 5) e.earliest_date = "18" + std::to_string(10 + i) + "-01-0" + std::to_string(1 + i % 9);
      if (i % 2 == 0) e.entity_type = "loc";
      records.push_back(e);
    }
    write_kb_jsonl((dir / "kb.jsonl").string(), records);
    auto result = import_kb((dir / "kb.jsonl").string(), (dir / "kb.sqlite").string());
    CHECK(result.count == records.size());
    auto reopened = KbStore::open((dir / "kb.sqlite").string());
    for (const auto& r : records) CHECK(reopened.get(r.qid) == r);
    fs::remove_all(dir);
  }

  TEST_CASE("re-import replaces an existing store") {
    const auto dir = testkit::scratch_dir("kb");
    sample_store(dir);
    const auto path = write_lines(dir, "one.jsonl", "{\"qid\":\"Q5\"}\n");
    auto result = import_kb(path, (dir / "kb.sqlite").string());
    CHECK(result.count == 1);
    CHECK(result.store.size() == 1);
    CHECK_FALSE(result.store.get("Q7235"));
    fs::remove_all(dir);
  }

  TEST_CASE("opening a missing store is an io error") {
    CHECK_THROWS_AS(KbStore::open("/nonexistent/dir/kb.sqlite"), IoError);
  }

  TEST_CASE("remote metadata: resolved, unresolved and merged") {
    testkit::MockServer mock;
    std::string last_ids;
    mock.server.Get("/entities", [&](const httplib::Request& req, httplib::Response& res) {
      last_ids = req.get_param_value("ids");
      res.set_content(
          R"({"Q7235":{"qid":"Q7235","labels":{"en":"Sophocles"},"earliest_date":"-0497"},"Q1":{"labels":{"fr":"univers"}}})",
          "application/json");
    });
    mock.start();

    const auto one = fetch_remote_metadata({"Q7235"}, mock.url("/entities"));
    CHECK(one.records.size() == 1);
    CHECK(one.unresolved.empty());
    CHECK(last_ids == "Q7235");

    const auto two = fetch_remote_metadata({"Q1", "Qx"}, mock.url("/entities"));
    REQUIRE(two.records.size() == 1);
    CHECK(two.records[0].qid == "Q1");
    CHECK(two.unresolved == std::vector<std::string>{"Qx"});
    CHECK(last_ids == "Q1|Qx");

    const auto dir = testkit::scratch_dir("kb");
    auto store = sample_store(dir);
    store.merge(one.records);
    const auto merged = store.get("Q7235");
    REQUIRE(merged);
    CHECK(merged->labels.at("de") == "Sophokles");  // untouched
    CHECK(merged->labels.at("en") == "Sophocles");
    CHECK(merged->entity_type == "person");
    fs::remove_all(dir);
  }

  TEST_CASE("remote metadata: 404 carries the status") {
    testkit::MockServer mock;
    mock.server.Get("/entities", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
    mock.start();
    try {
      fetch_remote_metadata({"Q7235"}, mock.url("/entities"), RetryPolicy{2, std::chrono::milliseconds(1)});
      FAIL("expected an http status error");
    } catch (const HttpStatusError& e) {
      CHECK(e.status() == 404);
    }
    CHECK_THROWS_AS(fetch_remote_metadata({}, mock.url("/entities")), PreconditionError);
  }
}
