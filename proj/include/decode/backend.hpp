#pragma once
// Chat-completion provider abstraction: a live OpenAI-compatible HTTP
// client, a deterministic mock/replay backend and a retry policy.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "decode/domain.hpp"

namespace decode {

enum class MessageRole { system, user, assistant };

struct ChatMessage {
  MessageRole role = MessageRole::user;
  std::string content;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;  // non-empty; last role must be user
  std::optional<int> max_output_tokens;
  std::optional<double> temperature;
  // Stage tag used by the mock backend to select a scripted reply.
  std::string stage;
};

struct ChatResponse {
  std::string content;
  TokenUsage usage;
  double provider_latency_s = 0.0;  // wall clock, informational only
};

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_s = 0.5;
  std::set<int> retryable_statuses = {429, 500, 502, 503, 504};
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& body)
      : Error("provider returned status " + std::to_string(status) + ": " + body),
        status(status) {}
  int status;
};

class AuthError : public Error {
 public:
  using Error::Error;
};

class ExhaustedRetries : public Error {
 public:
  explicit ExhaustedRetries(const std::string& last)
      : Error("retries exhausted; last error: " + last) {}
};

class MissingScriptEntry : public Error {
 public:
  explicit MissingScriptEntry(const std::string& stage)
      : Error("mock script has no entry for stage \"" + stage + "\"") {}
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

void validate_request(const ChatRequest& req);

// At most policy.max_attempts calls with exponential backoff. Only
// ProviderError statuses listed in the policy (and TransportError) are
// retried; everything else propagates immediately.
ChatResponse with_retries(Backend& backend, const ChatRequest& req,
                          const RetryPolicy& policy);

// Deterministic whitespace-token count; the mock backend's surrogate
// for provider-reported usage when the script does not pin counts.
long whitespace_token_count(const std::string& text);

// ---------------------------------------------------------------------------
// Mock / replay backend

struct ScriptReply {
  std::string content;
  std::optional<TokenUsage> usage;  // pinned usage overrides the surrogate
};

struct MockScript {
  // Replies per stage key, consumed in order; the last reply repeats
  // once the list is exhausted.
  std::map<std::string, std::vector<ScriptReply>> entries;

  // Accepts {"stage": "text"}, {"stage": {"content", "usage"}} and
  // {"stage": [reply, reply, ...]}.
  static MockScript from_json(const nlohmann::json& j);
  static MockScript load(const std::string& path);
};

class MockBackend : public Backend {
 public:
  explicit MockBackend(MockScript script) : script_(std::move(script)) {}

  ChatResponse complete(const ChatRequest& req) override;

  // Artificial per-call delay so concurrent fan-out is observable.
  void set_call_delay_ms(int ms) { call_delay_ms_ = ms; }

  struct CallRecord {
    std::string stage;
    long begin_seq = 0;
    long end_seq = 0;
  };
  std::vector<CallRecord> calls() const;
  int max_in_flight() const;
  void reset_instrumentation();

 private:
  MockScript script_;
  int call_delay_ms_ = 0;

  mutable std::mutex mu_;
  std::map<std::string, size_t> consumed_;
  std::vector<CallRecord> calls_;
  long seq_ = 0;
  int in_flight_ = 0;
  int max_in_flight_ = 0;
};

// ---------------------------------------------------------------------------
// Live OpenAI-compatible HTTP backend

struct HttpBackendOptions {
  std::string base_url;                        // e.g. "http://localhost:8080"
  std::string path = "/v1/chat/completions";
  std::string api_key;
  double timeout_s = 120.0;

  // Reads DECODE_BASE_URL and the key variable (default DECODE_API_KEY).
  static HttpBackendOptions from_env(const std::string& key_env = "DECODE_API_KEY");
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions opts);
  ~HttpBackend() override;

  ChatResponse complete(const ChatRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace decode
