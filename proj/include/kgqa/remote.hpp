// SPDX-License-Identifier: Apache-2.0
//
// OpenAI-compatible HTTP backends. Chat goes to `<base>/chat/completions`;
// perplexity uses the legacy `<base>/completions` endpoint with echo and
// token logprobs, scoring only the tokens past the context.
#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "kgqa/llm.hpp"

namespace kgqa::llm {

struct RemoteConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{60};
  int max_in_flight = 4;
  std::size_t context_budget = ChatBackend::kDefaultBudget;
};

class HttpJsonClient;

class RemoteChatBackend final : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteConfig config);
  ~RemoteChatBackend() override;
  std::string id() const override { return config_.model; }
  std::size_t context_budget() const override { return config_.context_budget; }
  Completion complete(const ChatPrompt& prompt) override;

  /// The request body sent for `prompt`; exposed for tests.
  json request_body(const ChatPrompt& prompt) const;

 private:
  RemoteConfig config_;
  std::unique_ptr<HttpJsonClient> http_;
};

class RemotePerplexity final : public PerplexityProvider {
 public:
  explicit RemotePerplexity(RemoteConfig config);
  ~RemotePerplexity() override;
  std::string id() const override { return config_.model; }
  double perplexity(std::string_view context, std::string_view continuation) override;

 private:
  RemoteConfig config_;
  std::unique_ptr<HttpJsonClient> http_;
};

}  // namespace kgqa::llm
