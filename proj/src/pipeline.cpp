#include "mhel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "mhel/corpus_io.hpp"
#include "mhel/error.hpp"

namespace mhel {

void PipelineConfig::validate() const {
  if (block_size < 1) throw PreconditionError("block size K must be >= 1");
  if (variant == Variant::threshold && (!threshold || std::isnan(*threshold))) {
    throw PreconditionError("threshold variant requires a threshold");
  }
  if (variant == Variant::threshold && *threshold == -INFINITY) {
    throw PreconditionError("threshold must not be -inf");
  }
  if (max_inflight < 1) throw PreconditionError("max_inflight must be >= 1");
}

const char* to_string(Route route) {
  switch (route) {
    case Route::easy_top1: return "easy_top1";
    case Route::llm_chain: return "llm_chain";
    case Route::llm_single: return "llm_single";
    case Route::backend_fallback: return "backend_fallback";
    case Route::no_candidates: return "no_candidates";
  }
  return "unknown";
}

std::optional<Route> route_from_string(std::string_view name) {
  for (Route r : {Route::easy_top1, Route::llm_chain, Route::llm_single, Route::backend_fallback,
                  Route::no_candidates}) {
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

LinkDecision link_mention(const MentionQuery& mention, const PipelineConfig& config,
                          const PipelineDeps& deps) {
  if (deps.encoder.dim() != deps.index.dim()) {
    throw DimensionError("encoder dim " + std::to_string(deps.encoder.dim()) +
                         " != index dim " + std::to_string(deps.index.dim()));
  }
  LinkDecision decision;
  decision.mention_id = mention.mention_id;
  decision.doc_id = mention.doc_id;
  decision.gold_qid = mention.gold_qid;

  MarkedText marked{mark_mention(mention.text, mention.start, mention.end), mention.language,
                    mention.mention_id};
  const auto embedding = deps.encoder.encode(marked);
  const auto hits = deps.index.search(embedding, config.block_size);
  decision.candidates_considered = static_cast<int>(hits.size());
  if (hits.empty()) {
    decision.route = Route::no_candidates;
    return decision;
  }
  decision.top_score = hits.front().score;

  // Scores are float; theta is compared in the same precision.
  if (config.variant == Variant::threshold &&
      hits.front().score >= static_cast<float>(*config.threshold)) {
    decision.route = Route::easy_top1;
    decision.linked_qid = hits.front().qid;
    decision.chosen_score = hits.front().score;
    return decision;
  }

  PromptContext ctx{mention.language_name, mention.document_date, mention.genre, std::move(marked),
                    deps.store.enrich(hits, mention.language)};
  ChatParams params = config.chat;
  if (auto it = config.models.find(mention.language); it != config.models.end()) {
    params.model = it->second;
  } else if (auto any = config.models.find("*"); any != config.models.end()) {
    params.model = any->second;
  }
  AdjudicationResult result =
      config.prompt_mode == PromptMode::chain
          ? adjudicate_chain(ctx, deps.chat, params, mention.mention_id)
          : adjudicate_single(ctx, deps.chat, params, mention.mention_id);
  decision.chat_calls = result.calls;

  if (result.route == AdjudicationRoute::backend_fallback) {
    if (config.on_backend_failure == BackendFailurePolicy::fail_run) {
      throw BackendError("mention " + mention.mention_id + ": " + result.error);
    }
    decision.route = Route::backend_fallback;
    decision.linked_qid = hits.front().qid;
    decision.chosen_score = hits.front().score;
  } else {
    decision.route = config.prompt_mode == PromptMode::chain ? Route::llm_chain : Route::llm_single;
    decision.linked_qid = result.linked_qid;
    if (decision.linked_qid) {
      const auto it = std::find_if(hits.begin(), hits.end(),
                                   [&](const RetrievalHit& h) { return h.qid == *decision.linked_qid; });
      decision.chosen_score = it->score;
    }
  }
  decision.adjudication = std::move(result);
  return decision;
}

std::size_t RunStats::count(Route route) const {
  const auto it = routes.find(to_string(route));
  return it == routes.end() ? 0 : it->second;
}

CorpusRun link_corpus(const std::vector<MentionQuery>& mentions, const PipelineConfig& config,
                      const PipelineDeps& deps) {
  config.validate();
  std::unordered_set<std::string_view> ids;
  for (const auto& m : mentions) {
    if (!ids.insert(m.mention_id).second) {
      throw PreconditionError("duplicate mention_id " + m.mention_id);
    }
  }

  const auto started = std::chrono::steady_clock::now();
  std::vector<std::optional<LinkDecision>> slots(mentions.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= mentions.size()) return;
      try {
        slots[i] = link_mention(mentions[i], config, deps);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };
  const std::size_t workers = std::min(config.max_inflight, mentions.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    if (workers > 0) worker();
  }
  if (failure) std::rethrow_exception(failure);

  CorpusRun run;
  run.decisions.reserve(mentions.size());
  run.stats.mentions = mentions.size();
  for (auto& slot : slots) {
    ++run.stats.routes[to_string(slot->route)];
    run.stats.chat_calls += static_cast<std::size_t>(slot->chat_calls);
    run.decisions.push_back(std::move(*slot));
  }
  run.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

}  // namespace mhel
