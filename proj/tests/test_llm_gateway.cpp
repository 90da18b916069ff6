#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "fqc/llm_gateway.hpp"
#include "fqc/util.hpp"
#include "test_support.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

using namespace fqc;
using fqc::test::CountingProvider;
using fqc::test::ScriptedProvider;

namespace {

const std::filesystem::path kFixtures = FQC_FIXTURES_DIR;

RenderedPrompt fixture_prompt(std::vector<EncodedImage> images = {}) {
  RenderedPrompt p;
  p.system_text = "You are a video classifier.";
  p.user_text = "Classify this video.";
  p.images = std::move(images);
  return p;
}

std::string envelope(const std::string& content) {
  nlohmann::ordered_json reply;
  reply["choices"] = {{{"message", {{"content", content}}}}};
  return reply.dump();
}

// Local loopback server owning its worker thread; handlers are registered
// on .server before start().
struct LocalServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  std::string origin() const { return "http://127.0.0.1:" + std::to_string(port); }
  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

GatewayConfig http_config(const std::string& endpoint) {
  setenv("FQC_TEST_KEY", "testkey", 1);
  GatewayConfig cfg;
  cfg.endpoint_url = endpoint;
  cfg.api_key_env = "FQC_TEST_KEY";
  cfg.max_retries = 3;
  cfg.backoff_base_s = 0.01;  // keep retry tests fast
  return cfg;
}

}  // namespace

// ── Wire format ─────────────────────────────────────────────────────────

TEST_CASE("wire: text-only request body matches the frozen fixture") {
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  const std::string body = build_chat_request_body(request).dump(2) + "\n";
  CHECK(body == read_file(kFixtures / "request_text_only.json"));
}

TEST_CASE("wire: image request carries data-URL content parts") {
  ChatRequest request{fixture_prompt({{"image/jpeg", "QUJD"}, {"image/png", "REVG"}}),
                      DecodingParams{}, {}, "t"};
  const std::string body = build_chat_request_body(request).dump(2) + "\n";
  CHECK(body == read_file(kFixtures / "request_with_images.json"));
}

TEST_CASE("wire: stop words appear only when set") {
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK_FALSE(build_chat_request_body(request).contains("stop"));

  request.params.stop_words = {"END"};
  const auto body = build_chat_request_body(request);
  REQUIRE(body.contains("stop"));
  CHECK(body["stop"] == nlohmann::ordered_json::array({"END"}));
}

TEST_CASE("wire: followups extend the message list in order") {
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  request.followups.push_back({"assistant", "gibberish"});
  request.followups.push_back({"user", "try again"});
  const auto body = build_chat_request_body(request);
  REQUIRE(body["messages"].size() == 4);
  CHECK(body["messages"][2]["role"] == "assistant");
  CHECK(body["messages"][2]["content"] == "gibberish");
  CHECK(body["messages"][3]["role"] == "user");
  CHECK(body["messages"][3]["content"] == "try again");
}

// ── Verdict rendering and parsing ───────────────────────────────────────

TEST_CASE("parse_verdict: plain JSON verdict") {
  const Verdict v = parse_verdict(R"({"reasoning":"looks fine","score":55})");
  CHECK(v.reasoning == "looks fine");
  CHECK(v.score == 55);
  CHECK(v.raw_response == R"({"reasoning":"looks fine","score":55})");
}

TEST_CASE("parse_verdict: fenced blocks with and without a language tag") {
  CHECK(parse_verdict("```json\n{\"reasoning\":\"r\",\"score\":12}\n```").score == 12);
  CHECK(parse_verdict("```\n{\"reasoning\":\"r\",\"score\":13}\n```").score == 13);
}

TEST_CASE("parse_verdict: verdict embedded in prose") {
  const std::string raw =
      "Sure! Based on the frames, here is my verdict: "
      R"({"reasoning":"promotional overlay","score":88})"
      " — hope that helps.";
  const Verdict v = parse_verdict(raw);
  CHECK(v.score == 88);
  CHECK(v.raw_response == raw);
}

TEST_CASE("parse_verdict: braces and escaped quotes inside strings") {
  const Verdict v =
      parse_verdict(R"({"reasoning":"contains { and } and \" inside","score":3})");
  CHECK(v.reasoning == "contains { and } and \" inside");
  CHECK(v.score == 3);
}

TEST_CASE("parse_verdict: fractional scores round half up") {
  CHECK(parse_verdict(R"({"reasoning":"r","score":87.6})").score == 88);
  CHECK(parse_verdict(R"({"reasoning":"r","score":87.4})").score == 87);
  CHECK(parse_verdict(R"({"reasoning":"r","score":0.5})").score == 1);
  CHECK(parse_verdict(R"({"reasoning":"r","score":99.5})").score == 100);
  CHECK(parse_verdict(R"({"reasoning":"r","score":-0.4})").score == 0);
  CHECK(parse_verdict(R"({"reasoning":"r","score":100.49})").score == 100);
}

TEST_CASE("parse_verdict: rejections") {
  auto expect = [](const std::string& raw, const std::string& needle) {
    CHECK_THROWS_WITH_AS(parse_verdict(raw), doctest::Contains(needle.c_str()), ParseError);
  };
  expect(R"({"reasoning":"r","score":100.5})", "score out of range");
  expect(R"({"reasoning":"r","score":-0.51})", "score out of range");
  expect(R"({"reasoning":"r","score":"90"})", "score must be a number");
  expect(R"({"reasoning":"r"})", "missing key score");
  expect(R"({"score":5})", "missing key reasoning");
  expect(R"({"reasoning":"","score":5})", "empty reasoning");
  expect(R"({"reasoning":42,"score":5})", "reasoning must be a string");
  expect("no verdict here", "no JSON object found");
  expect(R"({"reasoning":"r","score":5)", "unbalanced JSON object");
  expect(R"({"reasoning": oops,"score":5})", "invalid JSON");
}

TEST_CASE("parse_verdict: render round trip for every score") {
  for (int s = 0; s <= 100; ++s) {
    const Verdict v = parse_verdict(render_verdict("reason " + std::to_string(s), s));
    CHECK(v.score == s);
    CHECK(v.reasoning == "reason " + std::to_string(s));
  }
}

// ── Retry pacing ────────────────────────────────────────────────────────

TEST_CASE("backoff_delay_s: doubles per attempt from the base") {
  GatewayConfig cfg;
  cfg.backoff_base_s = 0.5;
  CHECK(backoff_delay_s(cfg, 0) == 0.5);
  CHECK(backoff_delay_s(cfg, 1) == 1.0);
  CHECK(backoff_delay_s(cfg, 2) == 2.0);
}

// ── Mock providers ──────────────────────────────────────────────────────

TEST_CASE("PlantedMockProvider: noiseless scores mirror the planted labels") {
  PlantedMockProvider provider({.seed = 1}, {{"a", 1}, {"b", 0}});
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "a"};
  const auto ra = provider.complete(req);
  CHECK(parse_verdict(ra.text).score == 100);
  CHECK(ra.attempts == 1);

  req.tag = "b";
  CHECK(parse_verdict(provider.complete(req).text).score == 0);

  // Same tag, same answer: the provider is a pure function of (seed, tag).
  req.tag = "a";
  CHECK(provider.complete(req).text == ra.text);
}

TEST_CASE("PlantedMockProvider: certain flip inverts the label") {
  PlantedMockProvider provider({.seed = 1, .flip_pos = 1.0, .flip_neg = 1.0},
                               {{"a", 1}, {"b", 0}});
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "a"};
  CHECK(parse_verdict(provider.complete(req).text).score == 0);
  req.tag = "b";
  CHECK(parse_verdict(provider.complete(req).text).score == 100);
}

TEST_CASE("PlantedMockProvider: flip rate tracks the configured probability") {
  std::map<std::string, int> labels;
  for (int i = 0; i < 400; ++i) labels["v" + std::to_string(i)] = 1;
  PlantedMockProvider provider({.seed = 9, .flip_pos = 0.5}, labels);
  int flipped = 0;
  for (const auto& [tag, label] : labels) {
    ChatRequest req{fixture_prompt(), DecodingParams{}, {}, tag};
    if (parse_verdict(provider.complete(req).text).score == 0) ++flipped;
  }
  CHECK(flipped > 140);
  CHECK(flipped < 260);
}

TEST_CASE("PlantedMockProvider: jitter stays near the planted pole and in range") {
  std::map<std::string, int> labels = {{"p", 1}, {"n", 0}};
  PlantedMockProvider provider({.seed = 3, .jitter = 10}, labels);
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "p"};
  const int sp = parse_verdict(provider.complete(req).text).score;
  CHECK(sp >= 90);
  CHECK(sp <= 100);
  req.tag = "n";
  const int sn = parse_verdict(provider.complete(req).text).score;
  CHECK(sn >= 0);
  CHECK(sn <= 10);
}

TEST_CASE("PlantedMockProvider: sub-request tags share the item label") {
  PlantedMockProvider provider({.seed = 5, .jitter = 8}, {{"item", 1}});
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "item#first_sub"};
  const int s1 = parse_verdict(provider.complete(req).text).score;
  CHECK(s1 >= 92);
  req.tag = "item#second_sub";
  const int s2 = parse_verdict(provider.complete(req).text).score;
  CHECK(s2 >= 92);
  // Distinct sub-tags seed distinct jitter streams; over eight subs at
  // jitter 8 a full collision across all of them is effectively impossible.
  bool any_difference = s1 != s2;
  for (int k = 0; k < 6 && !any_difference; ++k) {
    req.tag = "item#sub_" + std::to_string(k);
    any_difference = parse_verdict(provider.complete(req).text).score != s1;
  }
  CHECK(any_difference);

  req.tag = "unknown#sub";
  CHECK_THROWS_WITH_AS(provider.complete(req),
                       doctest::Contains("planted mock has no label for item: unknown"),
                       TransportError);
}

TEST_CASE("UniformMockProvider: deterministic, bounded, and centered") {
  UniformMockProvider provider(11);
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "x"};
  const auto first = provider.complete(req).text;
  CHECK(provider.complete(req).text == first);

  double sum = 0;
  for (int i = 0; i < 2000; ++i) {
    req.tag = "u" + std::to_string(i);
    const int s = parse_verdict(provider.complete(req).text).score;
    CHECK(s >= 0);
    CHECK(s <= 100);
    sum += s;
  }
  CHECK(sum / 2000.0 == doctest::Approx(50.0).epsilon(0.06));
}

TEST_CASE("CannedProvider: fixed response") {
  CannedProvider provider(render_verdict("canned", 42));
  ChatRequest req{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK(parse_verdict(provider.complete(req).text).score == 42);
}

// ── Gateway: send_chat and classify_once ────────────────────────────────

TEST_CASE("send_chat: forwards prompt, params, and tag to the provider") {
  auto provider = std::make_shared<ScriptedProvider>(render_verdict("ok", 1));
  LlmGateway gateway(provider, {});
  DecodingParams params;
  params.temperature = 0.25;
  gateway.send_chat(fixture_prompt(), params, "item42");

  const auto seen = provider->requests();
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].prompt.system_text == "You are a video classifier.");
  CHECK(seen[0].params.temperature == 0.25);
  CHECK(seen[0].tag == "item42");
  CHECK(seen[0].followups.empty());
}

TEST_CASE("classify_once: valid verdict on the first try") {
  auto provider = std::make_shared<ScriptedProvider>(render_verdict("clean", 77));
  LlmGateway gateway(provider, {});
  const ChatOutcome outcome = gateway.classify_once(fixture_prompt(), {}, "t");
  REQUIRE(std::holds_alternative<Verdict>(outcome));
  const auto& v = std::get<Verdict>(outcome);
  CHECK(v.score == 77);
  CHECK(v.attempt_count == 1);
  CHECK(provider->calls() == 1);
}

TEST_CASE("classify_once: prose then valid adds a corrective turn") {
  auto provider = std::make_shared<ScriptedProvider>("unused default");
  provider->script("t", {"I think this video is fine.", render_verdict("fixed", 64)});
  LlmGateway gateway(provider, {});
  const ChatOutcome outcome = gateway.classify_once(fixture_prompt(), {}, "t");
  REQUIRE(std::holds_alternative<Verdict>(outcome));
  CHECK(std::get<Verdict>(outcome).score == 64);
  CHECK(std::get<Verdict>(outcome).attempt_count == 2);

  const auto seen = provider->requests();
  REQUIRE(seen.size() == 2);
  CHECK(seen[0].followups.empty());
  REQUIRE(seen[1].followups.size() == 2);
  CHECK(seen[1].followups[0].role == "assistant");
  CHECK(seen[1].followups[0].text == "I think this video is fine.");
  CHECK(seen[1].followups[1].role == "user");
  CHECK(seen[1].followups[1].text ==
        "Format your output as a JSON object with the specified keys.");
}

TEST_CASE("classify_once: persistent prose exhausts the parse retries") {
  auto provider = std::make_shared<ScriptedProvider>("still just prose");
  LlmGateway gateway(provider, {});  // parse_retries 2 -> 3 rounds total
  const ChatOutcome outcome = gateway.classify_once(fixture_prompt(), {}, "t");
  REQUIRE(std::holds_alternative<FailureRecord>(outcome));
  const auto& f = std::get<FailureRecord>(outcome);
  CHECK(f.kind == FailureRecord::Kind::parse);
  CHECK(f.raw_text == "still just prose");
  CHECK(f.detail == "no JSON object found");
  CHECK(f.attempt_count == 3);
  CHECK(provider->calls() == 3);
}

TEST_CASE("classify_once: parse_retries 0 fails after a single round") {
  auto provider = std::make_shared<ScriptedProvider>("prose");
  GatewayConfig cfg;
  cfg.parse_retries = 0;
  LlmGateway gateway(provider, cfg);
  const ChatOutcome outcome = gateway.classify_once(fixture_prompt(), {}, "t");
  REQUIRE(std::holds_alternative<FailureRecord>(outcome));
  CHECK(std::get<FailureRecord>(outcome).attempt_count == 1);
  CHECK(provider->calls() == 1);
}

TEST_CASE("classify_once: transport and request errors become failure records") {
  auto provider = std::make_shared<ScriptedProvider>(render_verdict("ok", 1));
  provider->script("down", {ScriptedProvider::kThrowTransport});
  provider->script("rejected", {ScriptedProvider::kThrowRequest});
  LlmGateway gateway(provider, {});

  const ChatOutcome down = gateway.classify_once(fixture_prompt(), {}, "down");
  REQUIRE(std::holds_alternative<FailureRecord>(down));
  CHECK(std::get<FailureRecord>(down).kind == FailureRecord::Kind::transport);
  CHECK(std::get<FailureRecord>(down).detail == "scripted transport failure");

  const ChatOutcome rejected = gateway.classify_once(fixture_prompt(), {}, "rejected");
  REQUIRE(std::holds_alternative<FailureRecord>(rejected));
  CHECK(std::get<FailureRecord>(rejected).kind == FailureRecord::Kind::transport);
  CHECK(std::get<FailureRecord>(rejected).detail == "scripted request rejection");
}

TEST_CASE("gateway: in-flight gate caps concurrency") {
  auto inner = std::make_shared<ScriptedProvider>(render_verdict("ok", 1));
  auto counting = std::make_shared<CountingProvider>(inner, /*hold_ms=*/25);
  GatewayConfig cfg;
  cfg.max_in_flight = 3;
  LlmGateway gateway(counting, cfg);

  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back(
        [&gateway, i] { gateway.send_chat(fixture_prompt(), {}, "t" + std::to_string(i)); });
  }
  for (auto& t : threads) t.join();
  CHECK(counting->calls() == 8);
  CHECK(counting->high_water() <= 3);
  CHECK(counting->high_water() >= 2);  // with 8 threads and a 25ms hold, overlap is certain
}

TEST_CASE("gateway: max_in_flight 1 serializes requests") {
  auto inner = std::make_shared<ScriptedProvider>(render_verdict("ok", 1));
  auto counting = std::make_shared<CountingProvider>(inner, /*hold_ms=*/5);
  GatewayConfig cfg;
  cfg.max_in_flight = 1;
  LlmGateway gateway(counting, cfg);

  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&gateway] { gateway.send_chat(fixture_prompt(), {}, "t"); });
  }
  for (auto& t : threads) t.join();
  CHECK(counting->calls() == 6);
  CHECK(counting->high_water() == 1);
}

// ── HTTP provider against a loopback server ─────────────────────────────

TEST_CASE("HttpProvider: posts the fixture body with bearer auth under the path prefix") {
  LocalServer ls;
  std::string captured_body, captured_auth, captured_type;
  ls.server.Post("/v1/chat/completions",
                 [&](const httplib::Request& req, httplib::Response& res) {
                   captured_body = req.body;
                   captured_auth = req.get_header_value("Authorization");
                   captured_type = req.get_header_value("Content-Type");
                   res.set_content(envelope(render_verdict("r", 5)), "application/json");
                 });
  ls.start();

  HttpProvider provider(http_config(ls.origin() + "/v1"));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  const auto response = provider.complete(request);
  CHECK(response.attempts == 1);
  CHECK(parse_verdict(response.text).score == 5);
  CHECK(captured_auth == "Bearer testkey");
  CHECK(captured_type == "application/json");

  // The wire bytes parse back to exactly the frozen fixture.
  const auto parsed = nlohmann::ordered_json::parse(captured_body);
  CHECK(parsed.dump(2) + "\n" == read_file(kFixtures / "request_text_only.json"));
}

TEST_CASE("HttpProvider: no path prefix posts to /chat/completions") {
  LocalServer ls;
  std::atomic<int> hits{0};
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content(envelope(render_verdict("r", 1)), "application/json");
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  provider.complete(request);
  CHECK(hits == 1);
}

TEST_CASE("HttpProvider: images ride as image_url content parts") {
  LocalServer ls;
  std::string captured_body;
  ls.server.Post("/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    captured_body = req.body;
    res.set_content(envelope(render_verdict("r", 1)), "application/json");
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt({{"image/jpeg", "QUJD"}, {"image/png", "REVG"}}),
                      DecodingParams{}, {}, "t"};
  provider.complete(request);
  const auto parsed = nlohmann::ordered_json::parse(captured_body);
  CHECK(parsed.dump(2) + "\n" == read_file(kFixtures / "request_with_images.json"));
}

TEST_CASE("HttpProvider: 429 then success is retried transparently") {
  LocalServer ls;
  std::atomic<int> hits{0};
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
    } else {
      res.set_content(envelope(render_verdict("r", 9)), "application/json");
    }
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  const auto response = provider.complete(request);
  CHECK(response.attempts == 2);
  CHECK(hits == 2);
}

TEST_CASE("HttpProvider: two 500s then success takes three attempts") {
  LocalServer ls;
  std::atomic<int> hits{0};
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    if (++hits <= 2) {
      res.status = 500;
    } else {
      res.set_content(envelope(render_verdict("r", 9)), "application/json");
    }
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK(provider.complete(request).attempts == 3);
}

TEST_CASE("HttpProvider: persistent 503 exhausts retries with a transport error") {
  LocalServer ls;
  std::atomic<int> hits{0};
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  ls.start();

  auto cfg = http_config(ls.origin());
  cfg.max_retries = 1;
  HttpProvider provider(cfg);
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK_THROWS_WITH_AS(provider.complete(request),
                       doctest::Contains("HTTP 503 after 2 attempts"), TransportError);
  CHECK(hits == 2);
}

TEST_CASE("HttpProvider: client errors are not retried") {
  LocalServer ls;
  std::atomic<int> hits{0};
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 404;
    res.set_content("no such model", "text/plain");
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  try {
    provider.complete(request);
    FAIL("expected RequestError");
  } catch (const RequestError& e) {
    const std::string what = e.what();
    CHECK(what.find("HTTP 404") != std::string::npos);
    CHECK(what.find("no such model") != std::string::npos);
  }
  CHECK(hits == 1);
}

TEST_CASE("HttpProvider: malformed completion envelope is a transport error") {
  LocalServer ls;
  ls.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"unexpected":"shape"})", "application/json");
  });
  ls.start();

  HttpProvider provider(http_config(ls.origin()));
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK_THROWS_WITH_AS(provider.complete(request),
                       doctest::Contains("malformed completion response"), TransportError);
}

TEST_CASE("HttpProvider: connection refused retries then reports") {
  int dead_port;
  {
    LocalServer ls;
    ls.start();
    dead_port = ls.port;
  }  // server gone; the port now refuses connections

  auto cfg = http_config("http://127.0.0.1:" + std::to_string(dead_port));
  cfg.max_retries = 1;
  HttpProvider provider(cfg);
  ChatRequest request{fixture_prompt(), DecodingParams{}, {}, "t"};
  CHECK_THROWS_WITH_AS(provider.complete(request),
                       doctest::Contains("connection failed after 2 attempts"), TransportError);
}

TEST_CASE("HttpProvider: missing API key environment variable fails construction") {
  unsetenv("FQC_DEFINITELY_UNSET_KEY");
  GatewayConfig cfg;
  cfg.endpoint_url = "http://127.0.0.1:1";
  cfg.api_key_env = "FQC_DEFINITELY_UNSET_KEY";
  CHECK_THROWS_WITH_AS(
      HttpProvider{cfg},
      doctest::Contains("API key environment variable not set: FQC_DEFINITELY_UNSET_KEY"),
      std::invalid_argument);
}

TEST_CASE("HttpProvider: endpoint must carry a scheme") {
  GatewayConfig cfg = http_config("localhost:8080");
  CHECK_THROWS_WITH_AS(HttpProvider{cfg},
                       doctest::Contains("endpoint_url must include a scheme"),
                       std::invalid_argument);
}