#include "fqc/llm_gateway.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "fqc/util.hpp"

namespace fqc {

using nlohmann::ordered_json;

void DecodingParams::validate() const {
  if (temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  if (top_p <= 0.0 || top_p > 1.0) throw std::invalid_argument("top_p must be in (0,1]");
  if (model_id.empty()) throw std::invalid_argument("model_id must be nonempty");
}

void GatewayConfig::validate() const {
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (request_timeout_s <= 0.0) throw std::invalid_argument("request_timeout_s must be positive");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (backoff_base_s <= 0.0) throw std::invalid_argument("backoff_base_s must be positive");
  if (parse_retries < 0) throw std::invalid_argument("parse_retries must be >= 0");
}

std::string to_string(FailureRecord::Kind kind) {
  switch (kind) {
    case FailureRecord::Kind::parse: return "parse";
    case FailureRecord::Kind::transport: return "transport";
    case FailureRecord::Kind::frames: return "frames";
  }
  return "unknown";
}

FailureRecord::Kind failure_kind_from_string(const std::string& s) {
  if (s == "parse") return FailureRecord::Kind::parse;
  if (s == "transport") return FailureRecord::Kind::transport;
  if (s == "frames") return FailureRecord::Kind::frames;
  throw std::invalid_argument("unknown failure kind: " + s);
}

ordered_json build_chat_request_body(const ChatRequest& request) {
  ordered_json body;
  body["model"] = request.params.model_id;

  ordered_json messages = ordered_json::array();
  messages.push_back({{"role", "system"}, {"content", request.prompt.system_text}});

  if (request.prompt.images.empty()) {
    messages.push_back({{"role", "user"}, {"content", request.prompt.user_text}});
  } else {
    ordered_json parts = ordered_json::array();
    parts.push_back({{"type", "text"}, {"text", request.prompt.user_text}});
    for (const EncodedImage& img : request.prompt.images) {
      parts.push_back({{"type", "image_url"}, {"image_url", {{"url", img.data_url()}}}});
    }
    messages.push_back({{"role", "user"}, {"content", std::move(parts)}});
  }
  for (const ChatMessage& m : request.followups) {
    messages.push_back({{"role", m.role}, {"content", m.text}});
  }
  body["messages"] = std::move(messages);

  body["temperature"] = request.params.temperature;
  body["top_p"] = request.params.top_p;
  body["frequency_penalty"] = request.params.frequency_penalty;
  body["presence_penalty"] = request.params.presence_penalty;
  if (!request.params.stop_words.empty()) body["stop"] = request.params.stop_words;
  return body;
}

double backoff_delay_s(const GatewayConfig& cfg, int attempt) {
  return cfg.backoff_base_s * std::pow(2.0, attempt);
}

namespace {

// scheme://host[:port][/prefix] -> (origin, prefix)
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw std::invalid_argument("endpoint_url must include a scheme: " + url);
  }
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, ""};
  std::string prefix = url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, slash), prefix};
}

}  // namespace

HttpProvider::HttpProvider(GatewayConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.endpoint_url.empty()) throw std::invalid_argument("endpoint_url is empty");
  std::tie(origin_, path_prefix_) = split_endpoint(cfg_.endpoint_url);
  if (!cfg_.api_key_env.empty()) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
      api_key_ = key;
    } else {
      throw std::invalid_argument("API key environment variable not set: " + cfg_.api_key_env);
    }
  }
}

ChatResponse HttpProvider::complete(const ChatRequest& request) {
  const std::string body = build_chat_request_body(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  for (int attempt = 0;; ++attempt) {
    // One client per call: httplib clients are not safe for concurrent use.
    httplib::Client client(origin_);
    const auto timeout = std::chrono::duration<double>(cfg_.request_timeout_s);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

    auto res = client.Post(path, body, "application/json");

    bool retryable = false;
    std::string reason;
    if (res) {
      if (res->status >= 200 && res->status < 300) {
        ordered_json reply;
        try {
          reply = ordered_json::parse(res->body);
          std::string text = reply.at("choices").at(0).at("message").at("content");
          return {std::move(text), attempt + 1};
        } catch (const ordered_json::exception& e) {
          throw TransportError(std::string("malformed completion response: ") + e.what());
        }
      }
      if (res->status == 429 || res->status >= 500) {
        retryable = true;
        reason = "HTTP " + std::to_string(res->status);
      } else {
        throw RequestError("HTTP " + std::to_string(res->status) + ": " + res->body);
      }
    } else {
      switch (res.error()) {
        case httplib::Error::Connection:
          retryable = true;
          reason = "connection failed";
          break;
        case httplib::Error::ConnectionTimeout:
        case httplib::Error::Read:
        case httplib::Error::Write:
          throw TransportError("request timeout (" + httplib::to_string(res.error()) + ")");
        default:
          throw TransportError("transport failure (" + httplib::to_string(res.error()) + ")");
      }
    }

    if (retryable) {
      if (attempt >= cfg_.max_retries) {
        throw TransportError(reason + " after " + std::to_string(attempt + 1) + " attempts");
      }
      const auto delay = std::chrono::duration<double>(backoff_delay_s(cfg_, attempt));
      std::this_thread::sleep_for(delay);
    }
  }
}

ChatResponse PlantedMockProvider::complete(const ChatRequest& request) {
  // Sub-requests tag as "item#subcategory"; the label key is the item part,
  // while the full tag seeds the RNG so subcategories draw independently.
  const std::string item_key = request.tag.substr(0, request.tag.find('#'));
  const auto it = labels_.find(item_key);
  if (it == labels_.end()) {
    throw TransportError("planted mock has no label for item: " + item_key);
  }
  const int label = it->second;
  Rng rng(derive_seed(cfg_.seed, request.tag));
  const double flip_prob = label == 1 ? cfg_.flip_pos : cfg_.flip_neg;
  const bool flipped = rng.next_double() < flip_prob;
  int score = (flipped ? 1 - label : label) * 100;
  if (cfg_.jitter > 0) {
    score += rng.next_int(-cfg_.jitter, cfg_.jitter);
    score = std::clamp(score, 0, 100);
  }
  return {render_verdict("planted verdict for " + request.tag, score), 1};
}

ChatResponse UniformMockProvider::complete(const ChatRequest& request) {
  Rng rng(derive_seed(seed_, request.tag));
  const int score = rng.next_int(0, 100);
  return {render_verdict("uniform verdict for " + request.tag, score), 1};
}

std::string render_verdict(const std::string& reasoning, int score) {
  ordered_json v;
  v["reasoning"] = reasoning;
  v["score"] = score;
  return v.dump();
}

namespace {

// Drops ``` fences (with optional language tag) when the text contains a
// fenced block; otherwise returns the text unchanged.
std::string strip_code_fences(const std::string& raw) {
  const std::size_t open = raw.find("```");
  if (open == std::string::npos) return raw;
  std::size_t start = open + 3;
  // Skip a language tag up to end of line.
  const std::size_t nl = raw.find('\n', start);
  const std::size_t close = raw.find("```", start);
  if (close == std::string::npos) return raw;
  if (nl != std::string::npos && nl < close) start = nl + 1;
  return raw.substr(start, close - start);
}

// First balanced {...} block, string-aware.
std::string first_json_object(const std::string& text) {
  const std::size_t start = text.find('{');
  if (start == std::string::npos) throw ParseError("no JSON object found");
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  throw ParseError("unbalanced JSON object");
}

}  // namespace

Verdict parse_verdict(const std::string& raw) {
  const std::string block = first_json_object(strip_code_fences(raw));
  ordered_json obj;
  try {
    obj = ordered_json::parse(block);
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError("verdict is not an object");
  if (!obj.contains("reasoning")) throw ParseError("missing key reasoning");
  if (!obj.at("reasoning").is_string()) throw ParseError("reasoning must be a string");
  if (!obj.contains("score")) throw ParseError("missing key score");
  if (!obj.at("score").is_number()) throw ParseError("score must be a number");

  Verdict v;
  v.reasoning = obj.at("reasoning").get<std::string>();
  if (v.reasoning.empty()) throw ParseError("empty reasoning");

  const double s = obj.at("score").get<double>();
  if (!(s >= -0.5 && s < 100.5)) {
    throw ParseError("score out of range: " + std::to_string(s));
  }
  v.score = std::clamp(static_cast<int>(std::floor(s + 0.5)), 0, 100);
  v.raw_response = raw;
  return v;
}

// Bounded in-flight gate. A plain mutex/cv pair so the cap can be a runtime
// value and tests can rely on exact semantics.
struct LlmGateway::Gate {
  std::mutex mu;
  std::condition_variable cv;
  int available = 0;

  void acquire() {
    std::unique_lock<std::mutex> lock(mu);
    cv.wait(lock, [this] { return available > 0; });
    --available;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu);
      ++available;
    }
    cv.notify_one();
  }
};

class LlmGateway::Slot {
 public:
  explicit Slot(Gate& gate) : gate_(gate) { gate_.acquire(); }
  ~Slot() { gate_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  Gate& gate_;
};

LlmGateway::LlmGateway(std::shared_ptr<ChatProvider> provider, GatewayConfig cfg)
    : provider_(std::move(provider)), cfg_(std::move(cfg)), gate_(std::make_shared<Gate>()) {
  if (!provider_) throw std::invalid_argument("gateway requires a provider");
  cfg_.validate();
  gate_->available = cfg_.max_in_flight;
}

ChatResponse LlmGateway::send_chat(const RenderedPrompt& prompt, const DecodingParams& params,
                                   const std::string& tag) {
  params.validate();
  ChatRequest request{prompt, params, {}, tag};
  Slot slot(*gate_);
  return provider_->complete(request);
}

ChatOutcome LlmGateway::classify_once(const RenderedPrompt& prompt, const DecodingParams& params,
                                      const std::string& tag) {
  params.validate();
  ChatRequest request{prompt, params, {}, tag};
  int attempts = 0;
  std::string last_raw;
  std::string last_error;

  for (int round = 0; round <= cfg_.parse_retries; ++round) {
    ChatResponse response;
    try {
      Slot slot(*gate_);
      response = provider_->complete(request);
    } catch (const TransportError& e) {
      return FailureRecord{FailureRecord::Kind::transport, e.what(), last_raw, attempts};
    } catch (const RequestError& e) {
      return FailureRecord{FailureRecord::Kind::transport, e.what(), last_raw, attempts};
    }
    attempts += response.attempts;
    last_raw = response.text;
    try {
      Verdict v = parse_verdict(response.text);
      v.attempt_count = attempts;
      return v;
    } catch (const ParseError& e) {
      last_error = e.what();
      request.followups.push_back({"assistant", response.text});
      request.followups.push_back(
          {"user", "Format your output as a JSON object with the specified keys."});
    }
  }
  return FailureRecord{FailureRecord::Kind::parse, last_error, last_raw, attempts};
}

}  // namespace fqc
