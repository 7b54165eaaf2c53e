#include "mhel/mock_backends.hpp"

#include <fstream>

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

ScriptedChat::ScriptedChat(std::vector<std::string> replies) : list_(std::move(replies)) {
  if (list_.empty()) throw PreconditionError("scripted chat needs at least one reply");
}

ScriptedChat::ScriptedChat(std::map<std::string, std::vector<std::string>> by_mention)
    : by_mention_(std::move(by_mention)), keyed_(true) {
  for (const auto& [id, replies] : by_mention_) {
    if (replies.empty()) throw PreconditionError("scripted chat: empty script for " + id);
  }
}

std::shared_ptr<ScriptedChat> ScriptedChat::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chat script " + path);
  json script;
  try {
    script = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path, 0, std::string("malformed chat script: ") + e.what());
  }
  try {
    if (script.is_array()) {
      return std::make_shared<ScriptedChat>(script.get<std::vector<std::string>>());
    }
    if (script.is_object()) {
      return std::make_shared<ScriptedChat>(
          script.get<std::map<std::string, std::vector<std::string>>>());
    }
  } catch (const json::type_error&) {
    // falls through to the error below
  }
  throw FormatError(path, 0, "chat script must be a list of strings or a map of lists");
}

std::string ScriptedChat::complete(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  log_.push_back(request);
  ++per_mention_[request.mention_id];
  if (!keyed_) return list_[cursor_++ % list_.size()];
  auto it = by_mention_.find(request.mention_id);
  if (it == by_mention_.end()) it = by_mention_.find("*");
  if (it == by_mention_.end()) {
    throw PreconditionError("scripted chat has no replies for mention " + request.mention_id);
  }
  auto& cursor = cursors_[it->first == "*" ? "*" + request.mention_id : it->first];
  return it->second[cursor++ % it->second.size()];
}

int ScriptedChat::calls() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(log_.size());
}

int ScriptedChat::calls_for(const std::string& mention_id) const {
  std::lock_guard lock(mutex_);
  const auto it = per_mention_.find(mention_id);
  return it == per_mention_.end() ? 0 : it->second;
}

std::vector<ChatRequest> ScriptedChat::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

FailingChat::FailingChat(std::shared_ptr<ChatClient> inner, Pattern pattern)
    : inner_(std::move(inner)), pattern_(std::move(pattern)) {}

std::string FailingChat::complete(const ChatRequest& request) {
  bool fail = false;
  {
    std::lock_guard lock(mutex_);
    const int index = calls_++;
    fail = pattern_.fail_always || pattern_.failing_calls.contains(index);
    if (fail) ++failures_;
  }
  if (fail) {
    if (pattern_.http_status != 0) throw HttpStatusError(pattern_.http_status, "scripted failure");
    throw TransportError("scripted transport failure");
  }
  return inner_->complete(request);
}

int FailingChat::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

int FailingChat::failures() const {
  std::lock_guard lock(mutex_);
  return failures_;
}

std::unique_ptr<Encoder> mock_encoder(std::size_t dim) { return std::make_unique<MockEncoder>(dim); }

std::shared_ptr<ChatClient> make_chat_client(const std::string& spec,
                                             HttpChatClient::Options options) {
  constexpr std::string_view kMock = "mock:";
  if (spec.rfind(kMock, 0) == 0) return ScriptedChat::from_file(spec.substr(kMock.size()));
  return std::make_shared<HttpChatClient>(spec, options);
}

}  // namespace mhel
