#include "mhel/adjudicator.hpp"

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

namespace {

constexpr std::string_view kNilSystem =
    "You are a highly precise multilingual information extraction system specialized in "
    "disambiguating entities within noisy historical texts. Your task is to analyse the text "
    "provided by the user and determine if the reference marked by [ENT] tags can be associated "
    "or not to one of the candidate Wikidata entities provided in the JSON list. Always respond "
    "by saying either \"yes\" or \"no\". Do not generate Python code.";

constexpr std::string_view kNilTask =
    "Answer if the entity mentioned between the [ENT] tags in the input text corresponds to one "
    "of the candidate Wikidata entity provided in the json. Give a simple binary answer.";

constexpr std::string_view kSelectionSystem =
    "You are an effective multilingual information extraction system specialized in "
    "disambiguating entities within noisy historical texts. Your task is to analyse the text "
    "provided by the user and disambiguate the reference marked by [ENT] tags by selecting a "
    "Wikidata entity from a given list of candidates. Always respond by returning a "
    "JSON-formatted answer; do not generate Python code.";

constexpr std::string_view kSelectionTask =
    "Disambiguate the entity mentioned between the [ENT] tags by selecting the most appropriate "
    "Wikidata entity from the list of candidates.\n\n"
    "Return the corresponding Wikipedia title and Wikidata ID of the selected entity in a JSON "
    "object formatted as follows:\n"
    "{\"wikipedia_title\": \"\", \"wikidata_id\": \"\"}\n\n"
    "Make sure to select both the Wikipedia title and the Wikidata ID from the provided list of "
    "candidates. Pay attention that the list of candidates may not include the entity mentioned. "
    "If none of the candidates match with high confidence the entity tagged with [ENT], return "
    "an empty json.";

void check_context(const PromptContext& ctx) {
  if (ctx.candidates.empty()) throw PreconditionError("prompt context has no candidates");
  validate_marked_text(ctx.annotated_text.text);
}

std::string user_prompt(const PromptContext& ctx, std::string_view task) {
  std::string out;
  out += "Read the input text written in ";
  out += ctx.language;
  out += ", published in ";
  out += ctx.document_date;
  out += " and belonging to the genre of ";
  out += ctx.genre;
  out += ".\n\n";
  out += task;
  out += "\n\nInput Text: ";
  out += ctx.annotated_text.text;
  out += "\n\nCandidates: ";
  out += candidates_json(ctx.candidates);
  return out;
}

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

// End index (exclusive) of the balanced object opening at `open`, or npos.
std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

AdjudicationResult fallback(AdjudicationResult result, const Error& e) {
  result.route = AdjudicationRoute::backend_fallback;
  result.linked_qid.reset();
  result.error = std::string(e.kind()) + ": " + e.what();
  return result;
}

std::unordered_set<std::string> allowed_ids(const PromptContext& ctx) {
  std::unordered_set<std::string> ids;
  for (const auto& c : ctx.candidates) ids.insert(c.qid);
  return ids;
}

}  // namespace

std::string candidates_json(std::span<const EnrichedCandidate> candidates) {
  nlohmann::ordered_json array = nlohmann::ordered_json::array();
  for (const auto& c : candidates) {
    nlohmann::ordered_json obj;
    obj["wikipedia_title"] = c.label;
    obj["wikidata_id"] = c.qid;
    if (c.description) obj["description"] = *c.description;
    if (c.entity_type) obj["entity_type"] = *c.entity_type;
    if (c.earliest_date) obj["earliest_date"] = *c.earliest_date;
    array.push_back(std::move(obj));
  }
  return array.dump();
}

std::vector<ChatMessage> render_nil_prompt(const PromptContext& ctx) {
  check_context(ctx);
  return {{"system", std::string(kNilSystem)}, {"user", user_prompt(ctx, kNilTask)}};
}

std::vector<ChatMessage> render_selection_prompt(const PromptContext& ctx) {
  check_context(ctx);
  return {{"system", std::string(kSelectionSystem)}, {"user", user_prompt(ctx, kSelectionTask)}};
}

BinaryAnswer parse_binary_answer(std::string_view reply) {
  std::string token;
  auto decide = [&token]() -> std::optional<BinaryAnswer> {
    if (token == "yes") return BinaryAnswer::yes;
    if (token == "no") return BinaryAnswer::no;
    return std::nullopt;
  };
  for (char c : reply) {
    if (is_ascii_letter(c)) {
      token += static_cast<char>(c | 0x20);
      continue;
    }
    if (auto answer = decide()) return *answer;
    token.clear();
  }
  return decide().value_or(BinaryAnswer::no);
}

std::optional<std::string> extract_selection(std::string_view reply,
                                             const std::unordered_set<std::string>& allowed) {
  for (std::size_t open = reply.find('{'); open != std::string_view::npos;
       open = reply.find('{', open + 1)) {
    const std::size_t end = balanced_end(reply, open);
    if (end == std::string_view::npos) continue;
    const json parsed = json::parse(reply.substr(open, end - open), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
    const auto it = parsed.find("wikidata_id");
    if (it == parsed.end() || !it->is_string()) return std::nullopt;
    std::string qid = it->get<std::string>();
    if (qid.empty() || !allowed.contains(qid)) return std::nullopt;
    return qid;
  }
  return std::nullopt;
}

const char* to_string(AdjudicationRoute route) {
  switch (route) {
    case AdjudicationRoute::chain_nil_no: return "chain_nil_no";
    case AdjudicationRoute::chain_selected: return "chain_selected";
    case AdjudicationRoute::chain_empty: return "chain_empty";
    case AdjudicationRoute::single_selected: return "single_selected";
    case AdjudicationRoute::single_empty: return "single_empty";
    case AdjudicationRoute::backend_fallback: return "backend_fallback";
  }
  return "unknown";
}

AdjudicationResult adjudicate_chain(const PromptContext& ctx, ChatClient& client,
                                    const ChatParams& params, const std::string& mention_id) {
  const auto nil_messages = render_nil_prompt(ctx);
  const auto selection_messages = render_selection_prompt(ctx);
  AdjudicationResult result;
  try {
    ++result.calls;
    result.raw_replies.push_back(chat(client, {nil_messages, params, mention_id}));
    if (parse_binary_answer(result.raw_replies.back()) == BinaryAnswer::no) {
      result.route = AdjudicationRoute::chain_nil_no;
      return result;
    }
    ++result.calls;
    result.raw_replies.push_back(chat(client, {selection_messages, params, mention_id}));
  } catch (const Error& e) {
    return fallback(std::move(result), e);
  }
  result.linked_qid = extract_selection(result.raw_replies.back(), allowed_ids(ctx));
  result.route =
      result.linked_qid ? AdjudicationRoute::chain_selected : AdjudicationRoute::chain_empty;
  return result;
}

AdjudicationResult adjudicate_single(const PromptContext& ctx, ChatClient& client,
                                     const ChatParams& params, const std::string& mention_id) {
  const auto messages = render_selection_prompt(ctx);
  AdjudicationResult result;
  try {
    ++result.calls;
    result.raw_replies.push_back(chat(client, {messages, params, mention_id}));
  } catch (const Error& e) {
    return fallback(std::move(result), e);
  }
  result.linked_qid = extract_selection(result.raw_replies.back(), allowed_ids(ctx));
  result.route =
      result.linked_qid ? AdjudicationRoute::single_selected : AdjudicationRoute::single_empty;
  return result;
}

}  // namespace mhel
