#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "mhel/chat.hpp"
#include "mhel/encoder.hpp"

namespace mhel {

// Replays canned replies and counts calls.
//
// List mode replays the list in call order, wrapping around at the end.
// Map mode keys replies by the request's mention_id, each with its own cursor
// (also wrapping); the key "*" is the script for mentions without an entry.
class ScriptedChat final : public ChatClient {
 public:
  explicit ScriptedChat(std::vector<std::string> replies);
  explicit ScriptedChat(std::map<std::string, std::vector<std::string>> by_mention);

  // Script file: a JSON list of strings, or an object mention_id -> list.
  static std::shared_ptr<ScriptedChat> from_file(const std::string& path);

  std::string complete(const ChatRequest& request) override;

  int calls() const;
  int calls_for(const std::string& mention_id) const;
  std::vector<ChatRequest> requests() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> list_;
  std::map<std::string, std::vector<std::string>> by_mention_;
  bool keyed_ = false;
  std::size_t cursor_ = 0;
  std::map<std::string, std::size_t> cursors_;
  std::map<std::string, int> per_mention_;
  std::vector<ChatRequest> log_;
};

// Fails on scheduled calls (0-based call indices) and forwards the rest.
class FailingChat final : public ChatClient {
 public:
  struct Pattern {
    std::set<int> failing_calls;
    bool fail_always = false;
    int http_status = 0;  // 0: fail with TransportError; otherwise HttpStatusError
  };

  FailingChat(std::shared_ptr<ChatClient> inner, Pattern pattern);

  std::string complete(const ChatRequest& request) override;
  int calls() const;
  int failures() const;

 private:
  std::shared_ptr<ChatClient> inner_;
  Pattern pattern_;
  mutable std::mutex mutex_;
  int calls_ = 0;
  int failures_ = 0;
};

std::unique_ptr<Encoder> mock_encoder(std::size_t dim);

// "mock:<script.json>" -> ScriptedChat; "http://..." -> HttpChatClient.
std::shared_ptr<ChatClient> make_chat_client(const std::string& spec,
                                             HttpChatClient::Options options = {});

}  // namespace mhel
