#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mhel/adjudicator.hpp"
#include "mhel/chat.hpp"
#include "mhel/encoder.hpp"
#include "mhel/kb_store.hpp"
#include "mhel/vector_index.hpp"

namespace mhel {

inline constexpr std::string_view kNil = "NIL";

enum class Variant { vanilla, threshold };
enum class PromptMode { chain, single };
enum class BackendFailurePolicy { fallback_top1, fail_run };

struct PipelineConfig {
  Variant variant = Variant::vanilla;
  PromptMode prompt_mode = PromptMode::chain;
  int block_size = 10;                   // K, candidates retrieved per mention
  std::optional<double> threshold;       // theta; required for Variant::threshold
  BackendFailurePolicy on_backend_failure = BackendFailurePolicy::fallback_top1;
  std::size_t max_inflight = 4;          // mentions processed concurrently
  ChatParams chat{};
  // Language code -> model id; "*" is the default. Overrides chat.model.
  std::map<std::string, std::string> models;

  // Throws PreconditionError on an inconsistent configuration.
  void validate() const;
};

// A gold mention span in its context. Offsets are UTF-8 byte offsets.
struct MentionQuery {
  std::string doc_id;
  std::string mention_id;
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string language;       // code, e.g. "fr"
  std::string language_name;  // e.g. "French"
  std::string document_date;
  std::string genre;
  std::optional<std::string> gold_qid;  // "NIL" allowed

  bool operator==(const MentionQuery&) const = default;
};

enum class Route { easy_top1, llm_chain, llm_single, backend_fallback, no_candidates };

const char* to_string(Route route);
std::optional<Route> route_from_string(std::string_view name);

struct LinkDecision {
  std::string mention_id;
  std::string doc_id;
  std::optional<std::string> linked_qid;  // nullopt means NIL
  Route route = Route::no_candidates;
  std::optional<float> top_score;         // absent when nothing was retrieved
  std::optional<float> chosen_score;
  int candidates_considered = 0;
  int chat_calls = 0;
  std::optional<std::string> gold_qid;
  std::optional<AdjudicationResult> adjudication;  // audit trail for LLM routes

  std::string predicted() const { return linked_qid.value_or(std::string(kNil)); }
};

struct PipelineDeps {
  const Encoder& encoder;
  const VectorIndex& index;
  const KbStore& store;
  ChatClient& chat;
};

// encode -> search top-K -> enrich -> easy path or LLM adjudication.
LinkDecision link_mention(const MentionQuery& mention, const PipelineConfig& config,
                          const PipelineDeps& deps);

struct RunStats {
  std::size_t mentions = 0;
  std::map<std::string, std::size_t> routes;  // route name -> count
  std::size_t chat_calls = 0;
  double wall_seconds = 0.0;

  std::size_t count(Route route) const;
};

struct CorpusRun {
  std::vector<LinkDecision> decisions;  // in input order
  RunStats stats;
};

// Links every mention with up to `config.max_inflight` in flight. Output order
// equals input order. Mention ids must be unique.
CorpusRun link_corpus(const std::vector<MentionQuery>& mentions, const PipelineConfig& config,
                      const PipelineDeps& deps);

}  // namespace mhel
