#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "mhel/error.hpp"

namespace mhel {

// An http:// URL split into the scheme+authority part and a base path with no
// trailing slash ("http://h:8080/api/" -> {"http://h:8080", "/api"}).
struct Endpoint {
  std::string origin;
  std::string base_path;

  std::string path(std::string_view suffix) const;
};

Endpoint parse_endpoint(std::string_view url);

struct RetryPolicy {
  int max_attempts = 2;
  std::chrono::milliseconds backoff{500};
};

// Runs `op`, retrying on TransportError per `policy`. Other errors propagate
// immediately. `retries` (optional) receives the number of retries performed.
template <class Op>
auto with_retry(const RetryPolicy& policy, Op&& op, int* retries = nullptr) {
  for (int attempt = 1;; ++attempt) {
    try {
      if (retries != nullptr) *retries = attempt - 1;
      return op();
    } catch (const TransportError&) {
      if (attempt >= policy.max_attempts) throw;
      if (policy.backoff.count() > 0) std::this_thread::sleep_for(policy.backoff);
    }
  }
}

struct HttpTimeouts {
  std::chrono::milliseconds connect{10'000};
  std::chrono::milliseconds read{300'000};
};

// Single blocking POST of a JSON body; returns the response body.
// Throws TransportError on connection failure and HttpStatusError on >= 400.
std::string http_post_json(const Endpoint& endpoint, std::string_view suffix,
                           const std::string& body, const HttpTimeouts& timeouts = {});

// Single blocking GET of an absolute path with an already-encoded query.
std::string http_get(const Endpoint& endpoint, const std::string& path_and_query,
                     const HttpTimeouts& timeouts = {});

// Percent-encodes a query parameter value.
std::string url_encode(std::string_view value);

}  // namespace mhel
