#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mhel/calibration.hpp"
#include "mhel/corpus_io.hpp"
#include "mhel/error.hpp"
#include "mhel/evaluation.hpp"
#include "mhel/jsonl.hpp"
#include "mhel/kb_store.hpp"
#include "mhel/mock_backends.hpp"
#include "mhel/pipeline.hpp"
#include "mhel/vector_index.hpp"

#ifndef MHEL_VERSION
#define MHEL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using mhel::json;

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw mhel::PreconditionError("not an integer list: " + text);
    }
  }
  return out;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mhel::IoError("cannot open " + path);
  json value = json::parse(in, nullptr, false);
  if (value.is_discarded() || !value.is_object()) {
    throw mhel::FormatError(path, 1, "expected a JSON object");
  }
  return value;
}

// Paths in a config file are relative to the file itself.
std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute() || p.rfind("http", 0) == 0) return p;
  return (base / p).lexically_normal().string();
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw mhel::PreconditionError(std::string("config field \"") + key + "\" has the wrong type");
  }
}

// ---- link ------------------------------------------------------------------

struct LinkFlags {
  std::string corpus;
  std::string config;
  std::string out;
  std::optional<std::string> variant;
  std::optional<std::string> prompt;
  std::optional<int> k;
  std::optional<double> theta;
  std::optional<std::string> encoder_endpoint;
  std::optional<std::string> chat_endpoint;
  std::optional<std::size_t> max_inflight;
  std::optional<std::string> on_backend_failure;
};

struct LinkSetup {
  mhel::PipelineConfig pipeline;
  mhel::EncoderConfig encoder;
  std::string chat_endpoint;
  std::string kb_path;
  std::string index_vectors;
  std::string index_ids;
  json models = json::object();
};

mhel::Variant parse_variant(const std::string& s) {
  if (s == "vanilla") return mhel::Variant::vanilla;
  if (s == "threshold") return mhel::Variant::threshold;
  throw mhel::PreconditionError("unknown variant " + s);
}

mhel::PromptMode parse_prompt(const std::string& s) {
  if (s == "chain") return mhel::PromptMode::chain;
  if (s == "single") return mhel::PromptMode::single;
  throw mhel::PreconditionError("unknown prompt mode " + s);
}

mhel::BackendFailurePolicy parse_failure_policy(const std::string& s) {
  if (s == "fallback-top1") return mhel::BackendFailurePolicy::fallback_top1;
  if (s == "fail") return mhel::BackendFailurePolicy::fail_run;
  throw mhel::PreconditionError("unknown backend failure policy " + s);
}

mhel::EncoderBackend parse_encoder_backend(const std::string& s) {
  if (s == "mock") return mhel::EncoderBackend::mock;
  if (s == "http") return mhel::EncoderBackend::http;
  if (s == "precomputed") return mhel::EncoderBackend::precomputed;
  throw mhel::PreconditionError("unknown encoder backend " + s);
}

const char* name_of(mhel::Variant v) { return v == mhel::Variant::vanilla ? "vanilla" : "threshold"; }
const char* name_of(mhel::PromptMode p) { return p == mhel::PromptMode::chain ? "chain" : "single"; }
const char* name_of(mhel::BackendFailurePolicy p) {
  return p == mhel::BackendFailurePolicy::fallback_top1 ? "fallback-top1" : "fail";
}
const char* name_of(mhel::EncoderBackend b) {
  switch (b) {
    case mhel::EncoderBackend::mock: return "mock";
    case mhel::EncoderBackend::http: return "http";
    case mhel::EncoderBackend::precomputed: return "precomputed";
  }
  return "unknown";
}

// flags > config file > environment > defaults
LinkSetup resolve_link_setup(const LinkFlags& flags) {
  const json cfg = read_json_file(flags.config);
  const fs::path base = fs::path(flags.config).parent_path();
  LinkSetup s;

  s.pipeline.variant = parse_variant(flags.variant.value_or(get_or<std::string>(cfg, "variant", "vanilla")));
  s.pipeline.prompt_mode = parse_prompt(flags.prompt.value_or(get_or<std::string>(cfg, "prompt", "chain")));
  s.pipeline.block_size = flags.k.value_or(get_or<int>(cfg, "k", 10));
  if (flags.theta) {
    s.pipeline.threshold = *flags.theta;
  } else if (cfg.contains("theta") && !cfg["theta"].is_null()) {
    s.pipeline.threshold = get_or<double>(cfg, "theta", 0.0);
  }
  s.pipeline.max_inflight = flags.max_inflight.value_or(get_or<std::size_t>(cfg, "max_inflight", 4));
  s.pipeline.on_backend_failure = parse_failure_policy(
      flags.on_backend_failure.value_or(get_or<std::string>(cfg, "on_backend_failure", "fallback-top1")));

  const json chat = get_or<json>(cfg, "chat", json::object());
  s.pipeline.chat.temperature = get_or<double>(chat, "temperature", 0.0);
  s.pipeline.chat.max_tokens = get_or<int>(chat, "max_tokens", 256);
  s.models = get_or<json>(chat, "models", json::object());
  if (!s.models.is_object()) throw mhel::PreconditionError("config chat.models must be an object");
  for (const auto& [lang, model] : s.models.items()) {
    if (!model.is_string()) throw mhel::PreconditionError("config chat.models." + lang + " must be a string");
    s.pipeline.models[lang] = model.get<std::string>();
  }
  std::string chat_endpoint = get_or<std::string>(chat, "endpoint", env("MHEL_CHAT_ENDPOINT").value_or(""));
  if (flags.chat_endpoint) chat_endpoint = *flags.chat_endpoint;
  if (chat_endpoint.rfind("mock:", 0) == 0 && !flags.chat_endpoint) {
    chat_endpoint = "mock:" + resolve(base, chat_endpoint.substr(5));
  }
  if (chat_endpoint.empty()) throw mhel::PreconditionError("no chat endpoint configured");
  s.chat_endpoint = chat_endpoint;

  const json enc = get_or<json>(cfg, "encoder", json::object());
  s.encoder.backend = parse_encoder_backend(get_or<std::string>(enc, "backend", "mock"));
  s.encoder.dim = get_or<std::size_t>(enc, "dim", 0);
  s.encoder.max_inflight = s.pipeline.max_inflight;
  s.encoder.vectors_path = resolve(base, get_or<std::string>(enc, "vectors", ""));
  s.encoder.ids_path = resolve(base, get_or<std::string>(enc, "ids", ""));
  if (auto e = env("MHEL_ENCODER_ENDPOINT")) s.encoder.endpoint = *e;
  if (enc.contains("endpoint")) s.encoder.endpoint = get_or<std::string>(enc, "endpoint", "");
  if (flags.encoder_endpoint) {
    s.encoder.endpoint = *flags.encoder_endpoint;
    s.encoder.backend = mhel::EncoderBackend::http;
  }

  s.kb_path = resolve(base, get_or<std::string>(cfg, "kb", ""));
  const json index = get_or<json>(cfg, "index", json::object());
  s.index_vectors = resolve(base, get_or<std::string>(index, "vectors", ""));
  s.index_ids = resolve(base, get_or<std::string>(index, "ids", ""));
  if (s.kb_path.empty()) throw mhel::PreconditionError("config lacks \"kb\"");
  if (s.index_vectors.empty() || s.index_ids.empty()) {
    throw mhel::PreconditionError("config lacks \"index\".vectors / .ids");
  }
  s.pipeline.validate();
  return s;
}

json setup_to_json(const LinkSetup& s) {
  json pipeline = {{"variant", name_of(s.pipeline.variant)},
                   {"prompt", name_of(s.pipeline.prompt_mode)},
                   {"k", s.pipeline.block_size},
                   {"theta", s.pipeline.threshold ? json(*s.pipeline.threshold) : json(nullptr)},
                   {"max_inflight", s.pipeline.max_inflight},
                   {"on_backend_failure", name_of(s.pipeline.on_backend_failure)}};
  json encoder = {{"backend", name_of(s.encoder.backend)}, {"dim", s.encoder.dim}};
  if (s.encoder.endpoint) encoder["endpoint"] = *s.encoder.endpoint;
  if (!s.encoder.vectors_path.empty()) encoder["vectors"] = s.encoder.vectors_path;
  if (!s.encoder.ids_path.empty()) encoder["ids"] = s.encoder.ids_path;
  json chat = {{"endpoint", s.chat_endpoint},
               {"temperature", s.pipeline.chat.temperature},
               {"max_tokens", s.pipeline.chat.max_tokens},
               {"models", s.models}};
  return {{"pipeline", pipeline},
          {"encoder", encoder},
          {"chat", chat},
          {"kb", s.kb_path},
          {"index", {{"vectors", s.index_vectors}, {"ids", s.index_ids}}}};
}

int run_link(const LinkFlags& flags) {
  const auto started = utc_now();
  LinkSetup setup = resolve_link_setup(flags);
  mhel::CorpusFile corpus = mhel::load_corpus(flags.corpus);
  const auto store = mhel::KbStore::open(setup.kb_path);
  const auto index = mhel::VectorIndex::load(setup.index_vectors, setup.index_ids);
  if (setup.encoder.backend != mhel::EncoderBackend::precomputed && setup.encoder.dim == 0) {
    setup.encoder.dim = index.dim();
  }
  const auto encoder = mhel::make_encoder(setup.encoder);
  const auto chat = mhel::make_chat_client(setup.chat_endpoint);

  const mhel::PipelineDeps deps{*encoder, index, store, *chat};
  const auto run = mhel::link_corpus(corpus.mentions, setup.pipeline, deps);
  mhel::write_predictions(flags.out, std::span<const mhel::LinkDecision>(run.decisions));

  json routes = json::object();
  for (const auto& [name, n] : run.stats.routes) routes[name] = n;
  const json manifest = {
      {"config", setup_to_json(setup)},
      {"corpus", {{"path", flags.corpus}, {"manifest", mhel::manifest_to_json(corpus.manifest)}}},
      {"stats",
       {{"mentions", run.stats.mentions},
        {"routes", routes},
        {"chat_calls", run.stats.chat_calls},
        {"wall_seconds", run.stats.wall_seconds}}},
      {"started_at", started},
      {"finished_at", utc_now()},
      {"versions", {{"mhel", MHEL_VERSION}, {"index_format", std::string(mhel::kVectorMagic, sizeof mhel::kVectorMagic)}}}};
  mhel::write_report(flags.out + ".manifest.json", manifest);

  std::printf("linked %zu mentions, %zu chat calls -> %s\n", run.stats.mentions, run.stats.chat_calls,
              flags.out.c_str());
  for (const auto& [name, n] : run.stats.routes) std::printf("  %-18s %zu\n", name.c_str(), n);
  return 0;
}

// ---- other commands ----------------------------------------------------------

int run_import_kb(const std::string& jsonl, const std::string& out) {
  const auto result = mhel::import_kb(jsonl, out);
  std::printf("imported %zu entities -> %s\n", result.count, out.c_str());
  return 0;
}

int run_build_index(const std::string& vectors, const std::string& ids, bool check, int samples) {
  const auto index = mhel::VectorIndex::load(vectors, ids);
  std::printf("index: %zu vectors, dim %zu\n", index.count(), index.dim());
  if (!check) return 0;
  std::mt19937_64 rng(20240501);
  std::normal_distribution<float> noise(0.0f, 0.1f);
  std::uniform_int_distribution<std::size_t> pick(0, index.count() - 1);
  const int k = static_cast<int>(std::min<std::size_t>(10, index.count()));
  for (int s = 0; s < samples; ++s) {
    const auto row = index.matrix().row(pick(rng));
    std::vector<float> query(row.begin(), row.end());
    for (auto& x : query) x += noise(rng);
    if (index.search(query, k) != mhel::brute_force_search(index.matrix(), query, k)) {
      throw mhel::Error("self-test: search disagrees with brute force on sample " + std::to_string(s));
    }
  }
  std::printf("self-test: %d sampled queries agree with brute force\n", samples);
  return 0;
}

int run_calibrate(const std::string& dev, const std::string& k_steps, double epsilon, bool gold_in_hits) {
  mhel::CalibrationConfig config;
  config.k_steps = parse_int_list(k_steps);
  config.epsilon = epsilon;
  config.validate();
  const auto records = mhel::read_dev_retrievals(dev);
  const double theta = mhel::calibrate_threshold(
      records, gold_in_hits ? mhel::CorrectnessRule::gold_in_hits : mhel::CorrectnessRule::rank1);
  const auto curve = mhel::recall_curve(records, config.k_steps);
  const int k = mhel::select_block_size(curve, config.epsilon);
  for (const auto& p : curve) std::printf("recall@%-4d %.6f\n", p.k, p.recall);
  std::printf("theta %.6f\nK %d\n", theta, k);
  return 0;
}

int run_evaluate(const std::string& pred, const std::optional<std::string>& gold, bool nil,
                 const std::optional<std::string>& report_path) {
  const auto predictions = mhel::read_predictions(pred);
  std::vector<mhel::EvalPair> pairs;
  if (gold) {
    const auto corpus = mhel::load_corpus(*gold);
    pairs = mhel::join_predictions(predictions, corpus.mentions);
  } else {
    pairs = mhel::pairs_from_predictions(predictions);
  }
  const auto micro = mhel::micro_scores(pairs);
  json report = {{"micro", mhel::to_json(micro)}};
  std::fputs(mhel::format_table(micro).c_str(), stdout);
  if (nil) {
    const auto nil_report = mhel::nil_scores(pairs);
    report["nil"] = mhel::to_json(nil_report);
    std::fputs(mhel::format_table(nil_report).c_str(), stdout);
  }
  if (report_path) mhel::write_report(*report_path, report);
  return 0;
}

int run_correlate(const std::string& pred) {
  const auto predictions = mhel::read_predictions(pred);
  std::vector<double> scores;
  std::vector<int> correct;
  for (const auto& p : predictions) {
    if (!p.gold_qid) throw mhel::PreconditionError("prediction lacks gold_qid: " + p.mention_id);
    if (!p.top_score) continue;  // nothing retrieved
    scores.push_back(*p.top_score);
    correct.push_back(p.pred_qid == *p.gold_qid ? 1 : 0);
  }
  std::fputs(mhel::format_table(mhel::point_biserial(scores, correct)).c_str(), stdout);
  return 0;
}

int run_tally(const std::string& annotations) {
  const auto records = mhel::read_error_annotations(annotations);
  std::fputs(mhel::format_table(mhel::tally_error_relations(records)).c_str(), stdout);
  return 0;
}

int run_fetch_metadata(const std::string& qids_path, const std::string& endpoint, const std::string& store) {
  std::ifstream in(qids_path);
  if (!in) throw mhel::IoError("cannot open " + qids_path);
  std::vector<std::string> qids;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) qids.push_back(line);
  }
  auto result = mhel::fetch_remote_metadata(qids, endpoint);
  auto kb = mhel::KbStore::open(store, mhel::KbStore::Mode::read_write);
  kb.merge(result.records);
  std::printf("merged %zu entities, %zu unresolved\n", result.records.size(), result.unresolved.size());
  for (const auto& q : result.unresolved) std::printf("unresolved %s\n", q.c_str());
  return 0;
}

int run_encode_mock(const std::string& text, const std::string& language, std::size_t dim) {
  const auto v = mhel::mock_encoder(dim)->encode({text, language, ""});
  for (float x : v) std::printf("%.9g\n", x);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilingual historical entity linking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MHEL_VERSION);

  std::string kb_jsonl, kb_out;
  auto* import_cmd = app.add_subcommand("import-kb", "Build a KB store from JSONL");
  import_cmd->add_option("jsonl", kb_jsonl)->required();
  import_cmd->add_option("--out", kb_out)->required();

  std::string vectors, ids;
  bool check = false;
  int samples = 100;
  auto* index_cmd = app.add_subcommand("build-index", "Load and validate an entity vector index");
  index_cmd->add_option("--vectors", vectors)->required();
  index_cmd->add_option("--ids", ids)->required();
  index_cmd->add_flag("--check", check, "Compare search against brute force on sampled queries");
  index_cmd->add_option("--samples", samples)->check(CLI::PositiveNumber);

  std::string dev, k_steps = "10,20,30,40,50";
  double epsilon = 0.01;
  bool gold_in_hits = false;
  auto* calib_cmd = app.add_subcommand("calibrate", "Pick theta and K from dev retrievals");
  calib_cmd->add_option("--dev", dev)->required();
  calib_cmd->add_option("--k-steps", k_steps);
  calib_cmd->add_option("--epsilon", epsilon);
  calib_cmd->add_flag("--gold-in-hits", gold_in_hits, "Use the gold hit's score, not only rank-1 hits");

  LinkFlags lf;
  auto* link_cmd = app.add_subcommand("link", "Link a mention corpus");
  link_cmd->add_option("--corpus", lf.corpus)->required();
  link_cmd->add_option("--config", lf.config)->required();
  link_cmd->add_option("--out", lf.out)->required();
  link_cmd->add_option("--variant", lf.variant)->check(CLI::IsMember({"vanilla", "threshold"}));
  link_cmd->add_option("--prompt", lf.prompt)->check(CLI::IsMember({"chain", "single"}));
  link_cmd->add_option("--k", lf.k);
  link_cmd->add_option("--theta", lf.theta);
  link_cmd->add_option("--encoder-endpoint", lf.encoder_endpoint);
  link_cmd->add_option("--chat-endpoint", lf.chat_endpoint, "http://host:port or mock:<script.json>");
  link_cmd->add_option("--max-inflight", lf.max_inflight);
  link_cmd->add_option("--on-backend-failure", lf.on_backend_failure)
      ->check(CLI::IsMember({"fallback-top1", "fail"}));

  std::string pred;
  std::optional<std::string> gold, report;
  bool nil = false;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions");
  eval_cmd->add_option("--pred", pred)->required();
  eval_cmd->add_option("--gold", gold, "Gold corpus; defaults to gold_qid in the predictions");
  eval_cmd->add_flag("--nil", nil, "Also report NIL precision/recall/F1");
  eval_cmd->add_option("--report", report);

  std::string corr_pred;
  auto* corr_cmd = app.add_subcommand("correlate", "Point-biserial correlation of top score and correctness");
  corr_cmd->add_option("--pred", corr_pred)->required();

  std::string annotations;
  auto* tally_cmd = app.add_subcommand("tally-errors", "Count error relations per dataset");
  tally_cmd->add_option("--annotations", annotations)->required();

  std::string qids_path, meta_endpoint, meta_store;
  auto* fetch_cmd = app.add_subcommand("fetch-metadata", "Merge remote entity metadata into a KB store");
  fetch_cmd->add_option("--qids", qids_path, "One qid per line")->required();
  fetch_cmd->add_option("--endpoint", meta_endpoint)->required();
  fetch_cmd->add_option("--store", meta_store)->required();

  std::string mock_text, mock_language;
  std::size_t mock_dim = 0;
  auto* mock_cmd = app.add_subcommand("encode-mock", "Print the mock encoder vector of a marked text");
  mock_cmd->add_option("text", mock_text)->required();
  mock_cmd->add_option("--language", mock_language)->required();
  mock_cmd->add_option("--dim", mock_dim)->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*import_cmd) return run_import_kb(kb_jsonl, kb_out);
    if (*index_cmd) return run_build_index(vectors, ids, check, samples);
    if (*calib_cmd) return run_calibrate(dev, k_steps, epsilon, gold_in_hits);
    if (*link_cmd) return run_link(lf);
    if (*eval_cmd) return run_evaluate(pred, gold, nil, report);
    if (*corr_cmd) return run_correlate(corr_pred);
    if (*tally_cmd) return run_tally(annotations);
    if (*fetch_cmd) return run_fetch_metadata(qids_path, meta_endpoint, meta_store);
    if (*mock_cmd) return run_encode_mock(mock_text, mock_language, mock_dim);
  } catch (const mhel::Error& e) {
    std::string msg = e.what();
    for (auto& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::fprintf(stderr, "error: %s: %s\n", e.kind(), msg.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 3;
  }
  return 1;
}
