#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "mhel/http.hpp"

namespace mhel {

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 256;
  std::string model;  // omitted from the request body when empty
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  ChatParams params;
  // Routing tag for scripted backends; never sent over the wire.
  std::string mention_id;
};

// A chat-completion backend. Implementations must be safe for concurrent use.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Checks the request and forwards it to `client`.
std::string chat(ChatClient& client, const ChatRequest& request);

// POST {endpoint}/chat with {"messages", "temperature", "max_tokens"};
// the reply is the "content" field of the response object.
class HttpChatClient final : public ChatClient {
 public:
  struct Options {
    RetryPolicy retry{};
    HttpTimeouts timeouts{};
  };

  explicit HttpChatClient(const std::string& endpoint);
  HttpChatClient(const std::string& endpoint, Options options);

  std::string complete(const ChatRequest& request) override;

  // Total retries performed across all calls.
  int retry_count() const { return retries_.load(); }

 private:
  Endpoint endpoint_;
  Options options_;
  std::atomic<int> retries_{0};
};

// Adds the transport retry policy to any client (used around mocks).
class RetryingChatClient final : public ChatClient {
 public:
  RetryingChatClient(std::shared_ptr<ChatClient> inner, RetryPolicy policy);
  std::string complete(const ChatRequest& request) override;
  int retry_count() const { return retries_.load(); }

 private:
  std::shared_ptr<ChatClient> inner_;
  RetryPolicy policy_;
  std::atomic<int> retries_{0};
};

}  // namespace mhel
