#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <thread>

#include "llmdcd/errors.hpp"
#include "llmdcd/llm_client.hpp"

using namespace llmdcd;

TEST_CASE("request and response bodies") {
  LlmEndpoint e;
  e.model_name = "m1";
  e.temperature = 0.5;
  const auto body = nlohmann::json::parse(HttpChatClient::request_body(e, {{"system", "s"}, {"user", "u"}}));
  CHECK(body["model"] == "m1");
  CHECK(body["temperature"] == 0.5);
  CHECK(body["messages"].size() == 2);
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == "u");

  CHECK(HttpChatClient::parse_response(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})") == "hi");
  CHECK_THROWS_AS(HttpChatClient::parse_response("{}"), TransportError);
  CHECK_THROWS_AS(HttpChatClient::parse_response("not json"), TransportError);

  e.temperature = -1;
  CHECK_THROWS_AS(e.validate(), DomainError);
  CHECK_THROWS_AS(make_client(LlmEndpoint{}), DomainError);
}

TEST_CASE("http client against a local server") {
  httplib::Server server;
  int calls = 0;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    auth = req.get_header_value("Authorization");
    if (calls == 1) {
      res.status = 503;
      return;
    }
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply;
    reply["choices"][0]["message"]["content"] = "echo " + body["messages"].back()["content"].get<std::string>();
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("LLMDCD_TEST_KEY", "secret", 1);
  LlmEndpoint e;
  e.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  e.api_key_env_var = "LLMDCD_TEST_KEY";
  e.max_retries = 2;
  e.timeout_seconds = 5;
  HttpChatClient client(e);
  CHECK(client.complete({{"user", "ping"}}) == "echo ping");
  CHECK(calls == 2);
  CHECK(auth == "Bearer secret");

  server.stop();
  thread.join();
  e.max_retries = 0;
  CHECK_THROWS_AS(HttpChatClient(e).complete({{"user", "ping"}}), TransportError);
}
