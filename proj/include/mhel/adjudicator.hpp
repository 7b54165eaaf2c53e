#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mhel/chat.hpp"
#include "mhel/encoder.hpp"
#include "mhel/kb_store.hpp"

namespace mhel {

// Everything the two prompts are rendered from.
struct PromptContext {
  std::string language;  // human-readable name, e.g. "French"
  std::string document_date;
  std::string genre;
  MarkedText annotated_text;
  std::vector<EnrichedCandidate> candidates;
};

// JSON array of {wikipedia_title, wikidata_id, description, entity_type,
// earliest_date}; absent fields are omitted.
std::string candidates_json(std::span<const EnrichedCandidate> candidates);

// Yes/no question: does the marked mention match any candidate?
std::vector<ChatMessage> render_nil_prompt(const PromptContext& ctx);

// Pick one candidate as {"wikipedia_title", "wikidata_id"} or return {}.
std::vector<ChatMessage> render_selection_prompt(const PromptContext& ctx);

enum class BinaryAnswer { yes, no };

// First standalone "yes"/"no" token (case-insensitive) decides; "no" when
// neither appears.
BinaryAnswer parse_binary_answer(std::string_view reply);

// Parses the first balanced {...} in `reply` and returns its "wikidata_id"
// if it is a non-empty string contained in `allowed`.
std::optional<std::string> extract_selection(std::string_view reply,
                                             const std::unordered_set<std::string>& allowed);

enum class AdjudicationRoute {
  chain_nil_no,
  chain_selected,
  chain_empty,
  single_selected,
  single_empty,
  backend_fallback,
};

const char* to_string(AdjudicationRoute route);

struct AdjudicationResult {
  std::optional<std::string> linked_qid;  // nullopt means NIL
  AdjudicationRoute route = AdjudicationRoute::chain_empty;
  std::vector<std::string> raw_replies;
  int calls = 0;       // backend calls attempted, including a failed one
  std::string error;   // set when route == backend_fallback
};

// NIL prompt first; on "yes" the selection prompt decides.
AdjudicationResult adjudicate_chain(const PromptContext& ctx, ChatClient& client,
                                    const ChatParams& params = {},
                                    const std::string& mention_id = {});

// Selection prompt only; an empty or invalid selection means NIL.
AdjudicationResult adjudicate_single(const PromptContext& ctx, ChatClient& client,
                                     const ChatParams& params = {},
                                     const std::string& mention_id = {});

}  // namespace mhel
