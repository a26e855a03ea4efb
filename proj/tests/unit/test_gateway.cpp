#include <catch_amalgamated.hpp>

#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "cofact/error.hpp"
#include "cofact/gateway.hpp"
#include "cofact/process.hpp"
#include "cofact/prompts.hpp"

using namespace cofact;
namespace fs = std::filesystem;

namespace {

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string chat_reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

struct MockServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};
  std::vector<int> statuses;  // per request; 200 after the list runs out
  std::string last_body;
  std::string last_auth;
  std::mutex mu;

  MockServer() {
    server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu);
      int n = hits++;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      int status = n < static_cast<int>(statuses.size()) ? statuses[n] : 200;
      res.status = status;
      if (status == 200) {
        auto j = nlohmann::json::parse(req.body);
        res.set_content(chat_reply("echo: " + j["messages"][0]["content"].get<std::string>()),
                        "application/json");
      } else {
        res.set_content("{\"error\": \"nope\"}", "application/json");
      }
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~MockServer() {
    server.stop();
    thread.join();
  }

  HttpProviderSettings settings() const {
    HttpProviderSettings s;
    s.endpoint = "http://127.0.0.1:" + std::to_string(port);
    s.credential_env = "COFACT_TEST_KEY";
    s.timeout_seconds = 10;
    return s;
  }
};

}  // namespace

TEST_CASE("cache keys depend on model and prompt") {
  auto k = cache_key("gpt-5.1", "hello");
  CHECK(k.size() == 64);
  CHECK(k == cache_key("gpt-5.1", "hello"));
  CHECK(k != cache_key("gpt-5.1", "hello "));
  CHECK(k != cache_key("gpt-5", "hello"));
  CHECK(cache_key("ab", "c") != cache_key("a", "bc"));
  CHECK(k == "c63e92fb8a4d62a69a6aaeb33f50b130aa81d197f64f5656e75d34ac15ca52f0");
}

TEST_CASE("stage ids round-trip") {
  for (auto s : {PromptStage::Elicit, PromptStage::Synthesize, PromptStage::Annotate, PromptStage::BoundReduce,
                 PromptStage::MapProps, PromptStage::TranslateFact}) {
    CHECK(parse_stage_id(stage_id(s)) == s);
  }
  CHECK_FALSE(parse_stage_id("nope"));
}

TEST_CASE("response cache stores responses verbatim with metadata") {
  TempDir dir("cofact-test");
  ResponseCache cache(dir.path() / "c");
  PromptRequest req{PromptStage::Annotate, "annotate", "prompt text", "m", "low"};
  std::string response = "line 1\n\n```c\nint x;\n```\n  trailing  ";
  cache.store("abc", req, response);
  CHECK(cache.lookup("abc") == response);
  CHECK_FALSE(cache.lookup("missing"));
  auto e = cache.entry("abc");
  REQUIRE(e);
  CHECK(e->stage == "annotate");
  CHECK_FALSE(e->timestamp.empty());
  CHECK(cache.keys() == std::vector<std::string>{"abc"});
  for (const auto& de : fs::directory_iterator(cache.dir())) {
    CHECK(de.path().filename().string().find(".tmp") == std::string::npos);
  }
}

TEST_CASE("live mode caches and replay mode never calls the provider") {
  TempDir dir("cofact-test");
  auto script = dir.path() / "script";
  fs::create_directories(script);
  write(script / "elicit.txt", "1. a property\n");
  auto provider = std::make_unique<ScriptedProvider>(script);
  auto* raw = provider.get();
  Gateway live(GatewayMode::Live, dir.path() / "cache", std::move(provider), "m");
  live.set_transcript_dir(dir.path() / "transcripts");
  CHECK(live.complete(PromptStage::Elicit, "elicit", "p") == "1. a property\n");
  CHECK(live.complete(PromptStage::Elicit, "elicit", "p") == "1. a property\n");
  CHECK(raw->calls(PromptStage::Elicit) == 1);
  CHECK(live.stats().provider_calls == 1);
  CHECK(live.stats().cache_hits == 1);
  CHECK(fs::exists(dir.path() / "transcripts" / "01_elicit.txt"));
  CHECK(fs::exists(dir.path() / "transcripts" / "02_elicit.txt"));

  Gateway replay(GatewayMode::Replay, dir.path() / "cache", nullptr, "m");
  CHECK(replay.complete(PromptStage::Elicit, "elicit", "p") == "1. a property\n");
  CHECK(replay.stats().provider_calls == 0);
  try {
    replay.complete(PromptStage::Elicit, "elicit", "other prompt");
    FAIL("expected a replay miss");
  } catch (const ReplayMissError& e) {
    CHECK(e.key() == cache_key("m", "other prompt"));
  }
  Gateway other_model(GatewayMode::Replay, dir.path() / "cache", nullptr, "m2");
  CHECK_THROWS_AS(other_model.complete(PromptStage::Elicit, "elicit", "p"), ReplayMissError);
  CHECK_THROWS_AS(Gateway(GatewayMode::Live, dir.path() / "cache", nullptr, "m"), ConfigError);
}

TEST_CASE("scripted provider numbers responses per stage") {
  TempDir dir("cofact-test");
  write(dir.path() / "synthesize_1.txt", "first");
  write(dir.path() / "synthesize_2.txt", "second");
  write(dir.path() / "synthesize.txt", "later");
  ScriptedProvider p(dir.path());
  PromptRequest r{PromptStage::Synthesize, "synthesize", "x", "m", "low"};
  CHECK(p.complete(r) == "first");
  CHECK(p.complete(r) == "second");
  CHECK(p.complete(r) == "later");
  r.stage = PromptStage::Elicit;
  CHECK_THROWS_AS(p.complete(r), GatewayError);
}

TEST_CASE("chat request bodies and responses") {
  PromptRequest r{PromptStage::Elicit, "elicit", "say \"hi\"\n", "gpt-5.1", "low"};
  auto body = nlohmann::json::parse(HttpChatProvider::build_body(r));
  CHECK(body["model"] == "gpt-5.1");
  CHECK(body["reasoning_effort"] == "low");
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "say \"hi\"\n");
  CHECK(HttpChatProvider::extract_content(chat_reply("ok")) == "ok");
  CHECK_THROWS_AS(HttpChatProvider::extract_content("not json"), GatewayError);
  CHECK_THROWS_AS(HttpChatProvider::extract_content("{\"error\": {\"message\": \"quota\"}}"), GatewayError);
}

TEST_CASE("http provider talks to a chat-completion endpoint") {
  MockServer server;
  ::setenv("COFACT_TEST_KEY", "secret", 1);
  HttpChatProvider p(server.settings());
  PromptRequest r{PromptStage::Elicit, "elicit", "hello", "gpt-5.1", "low"};
  CHECK(p.complete(r) == "echo: hello");
  CHECK(server.last_auth == "Bearer secret");
  CHECK(nlohmann::json::parse(server.last_body)["model"] == "gpt-5.1");
}

TEST_CASE("http provider retries server errors but not client errors") {
  ::setenv("COFACT_TEST_KEY", "secret", 1);
  {
    MockServer server;
    server.statuses = {500};
    HttpChatProvider p(server.settings());
    CHECK(p.complete({PromptStage::Elicit, "elicit", "x", "m", "low"}) == "echo: x");
    CHECK(server.hits == 2);
  }
  {
    MockServer server;
    server.statuses = {401, 401, 401};
    HttpChatProvider p(server.settings());
    try {
      p.complete({PromptStage::Synthesize, "synthesize", "x", "m", "low"});
      FAIL("expected an error");
    } catch (const GatewayError& e) {
      CHECK(e.stage() == Stage::Synthesis);
      CHECK(std::string(e.what()).find("401") != std::string::npos);
    }
    CHECK(server.hits == 1);
  }
}

TEST_CASE("http provider requires a credential") {
  ::unsetenv("COFACT_MISSING_KEY");
  HttpProviderSettings s;
  s.credential_env = "COFACT_MISSING_KEY";
  HttpChatProvider p(s);
  CHECK_THROWS_AS(p.complete({PromptStage::Elicit, "elicit", "x", "m", "low"}), GatewayError);
}

TEST_CASE("prompt templates") {
  auto e = prompts::elicit("Sort an array.");
  CHECK(e.find("Sort an array.") != std::string::npos);
  auto a = prompts::annotate("Sort.", "int main(void) { return 0; }", {"first", "second"});
  CHECK(a.find("1. first") != std::string::npos);
  CHECK(a.find("2. second") != std::string::npos);
  CHECK(a.find("int main(void) { return 0; }") != std::string::npos);
  CHECK(prompts::bound_reduce("int x;", 5).find("5") != std::string::npos);
  auto m = prompts::map_properties("int x;", {"p"}, {"assert(x);"});
  CHECK(m.find("1. assert(x);") != std::string::npos);
  CHECK(m.find("1. p\n") != std::string::npos);
  CHECK(prompts::translate_fact("int y;").find("int y;") != std::string::npos);
  CHECK(prompts::numbered({"a", "b"}) == "1. a\n2. b");
  auto r = prompts::retry_feedback("PROMPT", "ANSWER", "PROBLEM", 1);
  CHECK(r != prompts::retry_feedback("PROMPT", "ANSWER", "PROBLEM", 2));
  CHECK(r.find("PROMPT") != std::string::npos);
  CHECK(r.find("ANSWER") != std::string::npos);
  CHECK(r.find("PROBLEM") != std::string::npos);
}
