#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fqc/prompt_engine.hpp"

namespace fqc {

/// Request could not be completed (timeout, unreachable endpoint, retry
/// budget exhausted on 429/5xx).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Server rejected the request (4xx other than 429). Not retried.
class RequestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Assistant text did not contain a valid verdict object.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DecodingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  double frequency_penalty = 0.5;
  double presence_penalty = 0.0;
  std::vector<std::string> stop_words;
  std::string model_id = "gpt-4o";

  void validate() const;
};

struct Verdict {
  std::string reasoning;
  int score = 0;  // [0,100]
  std::string raw_response;
  int attempt_count = 1;
};

struct FailureRecord {
  enum class Kind { parse, transport, frames };
  Kind kind = Kind::parse;
  std::string detail;
  std::string raw_text;
  int attempt_count = 0;
};

std::string to_string(FailureRecord::Kind kind);
FailureRecord::Kind failure_kind_from_string(const std::string& s);

using ChatOutcome = std::variant<Verdict, FailureRecord>;

struct GatewayConfig {
  std::string endpoint_url;            // e.g. http://localhost:8080/v1
  std::string api_key_env = "FQC_API_KEY";  // env var holding the bearer key
  int max_in_flight = 4;
  double request_timeout_s = 120.0;
  int max_retries = 3;
  double backoff_base_s = 0.5;
  int parse_retries = 2;  // corrective re-sends after a bad verdict

  void validate() const;
};

struct ChatMessage {
  std::string role;
  std::string text;
};

struct ChatRequest {
  RenderedPrompt prompt;
  DecodingParams params;
  std::vector<ChatMessage> followups;  // appended after the first user turn
  std::string tag;  // correlation id (item id); never serialized to the wire
};

struct ChatResponse {
  std::string text;
  int attempts = 1;  // transport-level attempts consumed
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Chat-completions request body. Text-only prompts use a plain string
/// content; prompts with images use content parts with data-URL images.
nlohmann::ordered_json build_chat_request_body(const ChatRequest& request);

/// Delay before transport retry `attempt` (0-based): base * 2^attempt.
double backoff_delay_s(const GatewayConfig& cfg, int attempt);

/// POSTs to {endpoint_url}/chat/completions with bearer auth from the
/// configured environment variable. 429 and 5xx are retried with exponential
/// backoff; timeouts fail immediately; other 4xx raise RequestError.
class HttpProvider : public ChatProvider {
 public:
  explicit HttpProvider(GatewayConfig cfg);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  GatewayConfig cfg_;
  std::string origin_;       // scheme://host[:port]
  std::string path_prefix_;  // e.g. /v1
  std::string api_key_;
};

/// Returns a fixed response for every request.
class CannedProvider : public ChatProvider {
 public:
  explicit CannedProvider(std::string response) : response_(std::move(response)) {}
  ChatResponse complete(const ChatRequest&) override { return {response_, 1}; }
  std::string name() const override { return "mock:canned"; }

 private:
  std::string response_;
};

/// Planted-truth mock: the score is a seeded function of the item's label.
/// Deterministic per (seed, item id), independent of request order.
struct PlantedMockConfig {
  std::uint64_t seed = 0;
  double flip_pos = 0.0;  // probability a positive item scores as negative
  double flip_neg = 0.0;  // probability a negative item scores as positive
  int jitter = 0;         // uniform +-jitter added to the base score
};

class PlantedMockProvider : public ChatProvider {
 public:
  PlantedMockProvider(PlantedMockConfig cfg, std::map<std::string, int> labels_by_item)
      : cfg_(cfg), labels_(std::move(labels_by_item)) {}
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "mock:planted"; }

 private:
  PlantedMockConfig cfg_;
  std::map<std::string, int> labels_;
};

/// Label-independent seeded uniform scores in [0,100].
class UniformMockProvider : public ChatProvider {
 public:
  explicit UniformMockProvider(std::uint64_t seed) : seed_(seed) {}
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "mock:uniform"; }

 private:
  std::uint64_t seed_;
};

/// Canonical verdict JSON, the shape parse_verdict expects back.
std::string render_verdict(const std::string& reasoning, int score);

/// Extracts the verdict from assistant text: strips markdown code fences,
/// locates the first balanced JSON object, requires a string `reasoning` and
/// a numeric `score`. Fractional scores are rounded half-up; anything
/// outside [-0.5, 100.5) is rejected rather than clamped.
Verdict parse_verdict(const std::string& raw);

/// Shareable front door to a provider. Enforces at most max_in_flight
/// concurrently outstanding requests and runs the parse-retry loop.
class LlmGateway {
 public:
  LlmGateway(std::shared_ptr<ChatProvider> provider, GatewayConfig cfg);

  /// One request, no verdict parsing.
  ChatResponse send_chat(const RenderedPrompt& prompt, const DecodingParams& params,
                         const std::string& tag = "");

  /// Request + parse, re-sending with a corrective user turn on bad verdicts
  /// up to cfg.parse_retries times. Failures come back as values, never
  /// exceptions, so a batch can keep going.
  ChatOutcome classify_once(const RenderedPrompt& prompt, const DecodingParams& params,
                            const std::string& tag = "");

  const GatewayConfig& config() const { return cfg_; }
  ChatProvider& provider() { return *provider_; }

 private:
  class Slot;  // RAII in-flight token

  std::shared_ptr<ChatProvider> provider_;
  GatewayConfig cfg_;
  struct Gate;
  std::shared_ptr<Gate> gate_;
};

}  // namespace fqc
