#include "decode/backend.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace decode {

void validate_request(const ChatRequest& req) {
  if (req.messages.empty()) throw Error("chat request has no messages");
  if (req.messages.back().role != MessageRole::user) {
    throw Error("chat request must end with a user message");
  }
}

long whitespace_token_count(const std::string& text) {
  std::istringstream in(text);
  std::string tok;
  long n = 0;
  while (in >> tok) ++n;
  return n;
}

ChatResponse with_retries(Backend& backend, const ChatRequest& req,
                          const RetryPolicy& policy) {
  if (policy.max_attempts < 1) throw Error("retry policy needs max_attempts >= 1");
  std::string last_error;
  for (int attempt = 0; attempt < policy.max_attempts; ++attempt) {
    if (attempt > 0 && policy.backoff_base_s > 0) {
      const double delay = policy.backoff_base_s * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    try {
      return backend.complete(req);
    } catch (const ProviderError& e) {
      if (!policy.retryable_statuses.count(e.status)) throw;
      last_error = e.what();
    } catch (const TransportError& e) {
      last_error = e.what();
    }
  }
  throw ExhaustedRetries(last_error);
}

// ---------------------------------------------------------------------------
// Mock / replay backend

namespace {

ScriptReply reply_from_json(const nlohmann::json& j) {
  ScriptReply r;
  if (j.is_string()) {
    r.content = j.get<std::string>();
    return r;
  }
  r.content = j.at("content").get<std::string>();
  if (j.contains("usage")) {
    TokenUsage u;
    u.input_tokens = j.at("usage").at("input_tokens").get<long>();
    u.output_tokens = j.at("usage").at("output_tokens").get<long>();
    r.usage = u;
  }
  return r;
}

}  // namespace

MockScript MockScript::from_json(const nlohmann::json& j) {
  MockScript s;
  for (const auto& [key, value] : j.items()) {
    std::vector<ScriptReply> replies;
    if (value.is_array()) {
      for (const auto& v : value) replies.push_back(reply_from_json(v));
    } else {
      replies.push_back(reply_from_json(value));
    }
    if (replies.empty()) throw Error("mock script entry \"" + key + "\" is empty");
    s.entries[key] = std::move(replies);
  }
  return s;
}

MockScript MockScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mock script: " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  validate_request(req);

  long begin;
  const ScriptReply* reply = nullptr;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = script_.entries.find(req.stage);
    if (it == script_.entries.end()) throw MissingScriptEntry(req.stage);
    size_t& idx = consumed_[req.stage];
    reply = &it->second[std::min(idx, it->second.size() - 1)];
    ++idx;
    begin = ++seq_;
    ++in_flight_;
    max_in_flight_ = std::max(max_in_flight_, in_flight_);
  }

  if (call_delay_ms_ > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(call_delay_ms_));
  }

  ChatResponse resp;
  resp.content = reply->content;
  if (reply->usage) {
    resp.usage = *reply->usage;
  } else {
    long in_tokens = 0;
    for (const auto& m : req.messages) in_tokens += whitespace_token_count(m.content);
    resp.usage.input_tokens = in_tokens;
    resp.usage.output_tokens = whitespace_token_count(reply->content);
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    --in_flight_;
    calls_.push_back({req.stage, begin, ++seq_});
  }
  return resp;
}

std::vector<MockBackend::CallRecord> MockBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

int MockBackend::max_in_flight() const {
  std::lock_guard<std::mutex> lock(mu_);
  return max_in_flight_;
}

void MockBackend::reset_instrumentation() {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.clear();
  consumed_.clear();
  seq_ = 0;
  in_flight_ = 0;
  max_in_flight_ = 0;
}

}  // namespace decode
