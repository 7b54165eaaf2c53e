#include <atomic>
#include <thread>

#include "doctest.h"
#include "mhel/chat.hpp"
#include "mhel/error.hpp"
#include "mhel/http.hpp"
#include "mhel/jsonl.hpp"
#include "mock_server.hpp"

using namespace mhel;
using namespace std::chrono_literals;

namespace {

ChatRequest hello() {
  ChatRequest req;
  req.messages = {{"system", "You are terse."}, {"user", "Say hi."}};
  req.params.max_tokens = 32;
  req.mention_id = "m1";
  return req;
}

HttpChatClient::Options quick() {
  HttpChatClient::Options o;
  o.retry = {2, 10ms};
  o.timeouts = {1000ms, 150ms};
  return o;
}

}  // namespace

TEST_SUITE("http") {
  TEST_CASE("endpoint parsing") {
    const auto ep = parse_endpoint("http://localhost:8080/api/v1/");
    CHECK(ep.origin == "http://localhost:8080");
    CHECK(ep.base_path == "/api/v1");
    CHECK(ep.path("/chat") == "/api/v1/chat");
    CHECK(parse_endpoint("http://h:1").path("chat") == "/chat");
    CHECK_THROWS_AS(parse_endpoint("https://h"), PreconditionError);
    CHECK_THROWS_AS(parse_endpoint("ftp://h"), PreconditionError);
    CHECK_THROWS_AS(parse_endpoint("http://"), PreconditionError);
  }

  TEST_CASE("retry wrapper retries transport errors only") {
    int calls = 0;
    int retries = 0;
    const RetryPolicy policy{2, 1ms};
    auto flaky = [&] {
      if (calls++ == 0) throw TransportError("down");
      return 7;
    };
    CHECK(with_retry(policy, flaky, &retries) == 7);
    CHECK(retries == 1);

    calls = 0;
    auto status = [&]() -> int {
      ++calls;
      throw HttpStatusError(503, "busy");
    };
    CHECK_THROWS_AS(with_retry(policy, status), HttpStatusError);
    CHECK(calls == 1);

    calls = 0;
    auto dead = [&]() -> int {
      ++calls;
      throw TransportError("down");
    };
    CHECK_THROWS_AS(with_retry(policy, dead), TransportError);
    CHECK(calls == 2);
  }

  TEST_CASE("url encoding of the id separator") {
    CHECK(url_encode("Q1|Q2") == "Q1%7CQ2");
  }
}

TEST_SUITE("chat") {
  TEST_CASE("wire protocol: request body and reply content") {
    testkit::MockServer mock;
    json seen;
    mock.server.Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      res.set_content(R"({"content":"hi"})", "application/json");
    });
    mock.start();
    HttpChatClient client(mock.url(), quick());
    CHECK(chat(client, hello()) == "hi");
    CHECK(seen["messages"].size() == 2);
    CHECK(seen["messages"][0]["role"] == "system");
    CHECK(seen["messages"][1]["content"] == "Say hi.");
    CHECK(seen["temperature"] == 0.0);
    CHECK(seen["max_tokens"] == 32);
    CHECK_FALSE(seen.contains("mention_id"));
    CHECK_FALSE(seen.contains("model"));
    CHECK(client.retry_count() == 0);
    auto with_model = hello();
    with_model.params.model = "llama-3.1-8b-instruct";
    chat(client, with_model);
    CHECK(seen["model"] == "llama-3.1-8b-instruct");
  }

  TEST_CASE("empty message list is a precondition error") {
    HttpChatClient client("http://127.0.0.1:1");
    CHECK_THROWS_AS(chat(client, ChatRequest{}), PreconditionError);
  }

  TEST_CASE("fails once then succeeds: one retry") {
    testkit::MockServer mock;
    std::atomic<int> hits{0};
    mock.server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
      if (hits++ == 0) std::this_thread::sleep_for(400ms);
      res.set_content(R"({"content":"yes"})", "application/json");
    });
    mock.start();
    HttpChatClient client(mock.url(), quick());
    CHECK(chat(client, hello()) == "yes");
    CHECK(client.retry_count() == 1);
  }

  TEST_CASE("fails twice: hard error") {
    testkit::MockServer mock;
    mock.server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(400ms);
      res.set_content(R"({"content":"late"})", "application/json");
    });
    mock.start();
    HttpChatClient client(mock.url(), quick());
    CHECK_THROWS_AS(chat(client, hello()), TransportError);
    CHECK(client.retry_count() == 1);
  }

  TEST_CASE("status >= 400 is not retried") {
    testkit::MockServer mock;
    std::atomic<int> hits{0};
    mock.server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
      ++hits;
      res.status = 500;
    });
    mock.start();
    HttpChatClient client(mock.url(), quick());
    try {
      chat(client, hello());
      FAIL("expected an http status error");
    } catch (const HttpStatusError& e) {
      CHECK(e.status() == 500);
    }
    CHECK(hits.load() == 1);
  }

  TEST_CASE("malformed reply body") {
    testkit::MockServer mock;
    mock.server.Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"text":"wrong key"})", "application/json");
    });
    mock.start();
    HttpChatClient client(mock.url(), quick());
    CHECK_THROWS_AS(chat(client, hello()), FormatError);
  }
}
