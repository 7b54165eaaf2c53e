#include "mhel/chat.hpp"

#include "mhel/error.hpp"
#include "mhel/jsonl.hpp"

namespace mhel {

std::string chat(ChatClient& client, const ChatRequest& request) {
  if (request.messages.empty()) throw PreconditionError("chat: empty message list");
  return client.complete(request);
}

HttpChatClient::HttpChatClient(const std::string& endpoint)
    : HttpChatClient(endpoint, Options{}) {}

HttpChatClient::HttpChatClient(const std::string& endpoint, Options options)
    : endpoint_(parse_endpoint(endpoint)), options_(options) {}

std::string HttpChatClient::complete(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  json wire = {{"messages", messages},
               {"temperature", request.params.temperature},
               {"max_tokens", request.params.max_tokens}};
  if (!request.params.model.empty()) wire["model"] = request.params.model;
  const std::string body = wire.dump();
  int retries = 0;
  std::string reply;
  try {
    reply = with_retry(
        options_.retry,
        [&] { return http_post_json(endpoint_, "/chat", body, options_.timeouts); }, &retries);
  } catch (...) {
    retries_ += retries;
    throw;
  }
  retries_ += retries;

  json response;
  try {
    response = json::parse(reply);
  } catch (const json::parse_error& e) {
    throw FormatError(endpoint_.origin, 0, std::string("malformed /chat response: ") + e.what());
  }
  if (!response.is_object() || !response.contains("content") || !response["content"].is_string()) {
    throw FormatError(endpoint_.origin, 0, "/chat response lacks a string \"content\"");
  }
  return response["content"].get<std::string>();
}

RetryingChatClient::RetryingChatClient(std::shared_ptr<ChatClient> inner, RetryPolicy policy)
    : inner_(std::move(inner)), policy_(policy) {}

std::string RetryingChatClient::complete(const ChatRequest& request) {
  int retries = 0;
  try {
    auto reply = with_retry(policy_, [&] { return inner_->complete(request); }, &retries);
    retries_ += retries;
    return reply;
  } catch (...) {
    retries_ += retries;
    throw;
  }
}

}  // namespace mhel
