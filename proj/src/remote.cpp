// SPDX-License-Identifier: Apache-2.0
#include "kgqa/remote.hpp"

#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "kgqa/errors.hpp"

namespace kgqa::llm {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path below the origin, no trailing slash
};

Endpoint split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("LLM base URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  ep.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

/// POSTs JSON with bounded retries and an in-flight cap.
class HttpJsonClient {
 public:
  explicit HttpJsonClient(const RemoteConfig& config)
      : config_(config), endpoint_(split_url(config.base_url)), slots_(std::max(1, config.max_in_flight)) {}

  json post(const std::string& path, const json& body) {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    auto backoff = config_.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      auto res = client.Post(endpoint_.prefix + path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 200 && res->status < 300) {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw ProviderError(std::string("malformed response body: ") + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
      if (!transient_status(res->status)) throw ProviderError(last_error);
    }
    throw ProviderError("giving up after " + std::to_string(config_.max_retries + 1) + " attempts; " + last_error);
  }

 private:
  RemoteConfig config_;
  Endpoint endpoint_;
  std::counting_semaphore<> slots_;
};

RemoteChatBackend::RemoteChatBackend(RemoteConfig config)
    : config_(std::move(config)), http_(std::make_unique<HttpJsonClient>(config_)) {}

RemoteChatBackend::~RemoteChatBackend() = default;

json RemoteChatBackend::request_body(const ChatPrompt& prompt) const {
  std::string system = prompt.system;
  for (const auto& ex : prompt.exemplars) system += "\n\nExample:\n" + ex.text;
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", system}});
  for (const auto& m : prompt.turns) {
    messages.push_back({{"role", m.role == Role::agent ? "assistant" : "user"}, {"content", m.text}});
  }
  return {{"model", config_.model}, {"messages", messages}, {"temperature", 0}};
}

Completion RemoteChatBackend::complete(const ChatPrompt& prompt) {
  auto res = http_->post("/chat/completions", request_body(prompt));
  Completion c;
  try {
    c.text = res.at("choices").at(0).at("message").at("content").get<std::string>();
    if (res.contains("usage")) {
      c.usage.prompt_tokens = res["usage"].value("prompt_tokens", 0u);
      c.usage.completion_tokens = res["usage"].value("completion_tokens", 0u);
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected chat response shape: ") + e.what());
  }
  if (c.text.empty()) throw ProviderError("empty completion from " + config_.model);
  c.backend_id = config_.model;
  return c;
}

RemotePerplexity::RemotePerplexity(RemoteConfig config)
    : config_(std::move(config)), http_(std::make_unique<HttpJsonClient>(config_)) {}

RemotePerplexity::~RemotePerplexity() = default;

double RemotePerplexity::perplexity(std::string_view context, std::string_view continuation) {
  std::string prompt = std::string(context) + std::string(continuation);
  json body = {{"model", config_.model}, {"prompt", prompt}, {"max_tokens", 0},
               {"echo", true},           {"logprobs", 0},    {"temperature", 0}};
  auto res = http_->post("/completions", body);
  double total = 0.0;
  std::size_t n = 0;
  try {
    const auto& lp = res.at("choices").at(0).at("logprobs");
    const auto& logprobs = lp.at("token_logprobs");
    const auto& offsets = lp.at("text_offset");
    for (std::size_t i = 0; i < logprobs.size() && i < offsets.size(); ++i) {
      if (logprobs[i].is_null() || offsets[i].get<std::size_t>() < context.size()) continue;
      total -= logprobs[i].get<double>();
      ++n;
    }
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unexpected logprob response shape: ") + e.what());
  }
  if (n == 0) throw ProviderError("no continuation tokens scored by " + config_.model);
  return std::exp(total / static_cast<double>(n));
}

}  // namespace kgqa::llm
