#include <chrono>
#include <cstdlib>

#ifdef DECODE_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include "decode/backend.hpp"

namespace decode {

namespace {

const char* role_name(MessageRole r) {
  switch (r) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
  }
  return "user";
}

}  // namespace

HttpBackendOptions HttpBackendOptions::from_env(const std::string& key_env) {
  HttpBackendOptions opts;
  if (const char* url = std::getenv("DECODE_BASE_URL")) opts.base_url = url;
  if (const char* key = std::getenv(key_env.c_str())) opts.api_key = key;
  return opts;
}

struct HttpBackend::Impl {
  HttpBackendOptions opts;
  httplib::Client client;

  explicit Impl(HttpBackendOptions o) : opts(std::move(o)), client(opts.base_url) {
    client.set_read_timeout(std::chrono::duration<double>(opts.timeout_s));
    client.set_connection_timeout(std::chrono::duration<double>(opts.timeout_s));
  }
};

HttpBackend::HttpBackend(HttpBackendOptions opts) {
  if (opts.base_url.empty()) {
    throw AuthError("no base URL configured (set DECODE_BASE_URL)");
  }
  if (opts.api_key.empty()) {
    throw AuthError("no API key configured (set DECODE_API_KEY)");
  }
  impl_ = std::make_unique<Impl>(std::move(opts));
}

HttpBackend::~HttpBackend() = default;

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  validate_request(req);

  nlohmann::json body;
  body["model"] = req.model_id;
  auto& messages = body["messages"] = nlohmann::json::array();
  for (const auto& m : req.messages) {
    messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  if (req.max_output_tokens) body["max_tokens"] = *req.max_output_tokens;
  if (req.temperature) body["temperature"] = *req.temperature;

  httplib::Headers headers = {
      {"Authorization", "Bearer " + impl_->opts.api_key},
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto result = impl_->client.Post(impl_->opts.path, headers, body.dump(),
                                   "application/json");
  const auto t1 = std::chrono::steady_clock::now();

  if (!result) {
    throw TransportError("request to " + impl_->opts.base_url + impl_->opts.path +
                         " failed: " + httplib::to_string(result.error()));
  }
  if (result->status == 401 || result->status == 403) {
    throw AuthError("provider rejected credentials (status " +
                    std::to_string(result->status) + ")");
  }
  if (result->status < 200 || result->status >= 300) {
    throw ProviderError(result->status, result->body);
  }

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(result->status, std::string("unparseable body: ") + e.what());
  }

  ChatResponse resp;
  try {
    resp.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    resp.usage.input_tokens = j.at("usage").at("prompt_tokens").get<long>();
    resp.usage.output_tokens = j.at("usage").at("completion_tokens").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(result->status,
                        std::string("unexpected response shape: ") + e.what());
  }
  resp.provider_latency_s = std::chrono::duration<double>(t1 - t0).count();
  return resp;
}

}  // namespace decode
