#include "mhel/http.hpp"

#include "httplib.h"

namespace mhel {

std::string Endpoint::path(std::string_view suffix) const {
  std::string out = base_path;
  if (suffix.empty() || suffix.front() != '/') out += '/';
  out += suffix;
  return out;
}

Endpoint parse_endpoint(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw PreconditionError("unsupported endpoint (only http:// is supported): " +
                            std::string(url));
  }
  const auto slash = url.find('/', scheme.size());
  Endpoint ep;
  ep.origin = std::string(url.substr(0, slash));
  if (ep.origin.size() == scheme.size()) {
    throw PreconditionError("endpoint has no host: " + std::string(url));
  }
  if (slash != std::string_view::npos) {
    ep.base_path = std::string(url.substr(slash));
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
  }
  return ep;
}

namespace {

httplib::Client make_client(const Endpoint& endpoint, const HttpTimeouts& timeouts) {
  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(timeouts.connect);
  client.set_read_timeout(timeouts.read);
  client.set_write_timeout(timeouts.read);
  return client;
}

std::string checked_body(const httplib::Result& result, const std::string& what) {
  if (!result) {
    throw TransportError(what + ": " + httplib::to_string(result.error()));
  }
  if (result->status >= 400) throw HttpStatusError(result->status, what);
  return result->body;
}

}  // namespace

std::string http_post_json(const Endpoint& endpoint, std::string_view suffix,
                           const std::string& body, const HttpTimeouts& timeouts) {
  auto client = make_client(endpoint, timeouts);
  const std::string path = endpoint.path(suffix);
  return checked_body(client.Post(path, body, "application/json"),
                      "POST " + endpoint.origin + path);
}

std::string http_get(const Endpoint& endpoint, const std::string& path_and_query,
                     const HttpTimeouts& timeouts) {
  auto client = make_client(endpoint, timeouts);
  return checked_body(client.Get(path_and_query), "GET " + endpoint.origin + path_and_query);
}

std::string url_encode(std::string_view value) {
  return httplib::detail::encode_query_param(std::string(value));
}

}  // namespace mhel
