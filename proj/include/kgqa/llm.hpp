// SPDX-License-Identifier: Apache-2.0
//
// Language-model backends: chat completion for the agents, perplexity for the
// ambiguity plugin, and a cassette layer that records calls to JSON Lines and
// replays them offline.
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace kgqa::llm {

using json = nlohmann::json;

/// Turn roles. Exemplars use `example`; conversation turns use the rest.
enum class Role { agent, tool, user, example };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

struct Message {
  Role role = Role::user;
  std::string text;
  friend bool operator==(const Message&, const Message&) = default;
};

struct ChatPrompt {
  std::string system;
  std::vector<Message> exemplars;
  std::vector<Message> turns;

  /// Characters across all fields; the unit of the context budget.
  std::size_t serialized_length() const;
  /// Throws InvalidArgument on two consecutive agent turns.
  void validate() const;
  /// Canonical JSON (object keys sorted) used for cassette keys.
  json to_json() const;
  static ChatPrompt from_json(const json& j);
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct Completion {
  std::string text;
  Usage usage;
  std::string backend_id;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  /// Identifies the model behind the backend; part of every cassette key.
  virtual std::string id() const = 0;
  /// Upper bound on ChatPrompt::serialized_length().
  virtual std::size_t context_budget() const { return kDefaultBudget; }
  virtual Completion complete(const ChatPrompt& prompt) = 0;

  static constexpr std::size_t kDefaultBudget = 400'000;
};

class PerplexityProvider {
 public:
  virtual ~PerplexityProvider() = default;
  virtual std::string id() const = 0;
  /// Perplexity of `continuation` conditioned on `context`; always > 0.
  virtual double perplexity(std::string_view context, std::string_view continuation) = 0;
};

/// Budget-checked completion: throws BudgetError before any backend call when
/// the prompt is too long, InvalidArgument for malformed prompts.
Completion complete(const ChatPrompt& prompt, ChatBackend& backend);

/// Rejects empty continuations, then delegates.
double perplexity(std::string_view context, std::string_view continuation, PerplexityProvider& provider);

// ---------------------------------------------------------------------------
// Cassettes

struct CassetteEntry {
  std::string key;
  std::string kind;  // "chat" or "ppl"
  json request;
  json response;
};

/// SHA-256 hex of backend id and the request serialized with sorted keys.
std::string cassette_key(std::string_view backend_id, const json& request);

/// In-memory cassette, optionally appending each new entry to a file.
/// Safe for concurrent use.
class Cassette {
 public:
  Cassette() = default;
  /// Loads a JSON Lines cassette; a missing file yields an empty cassette.
  static std::shared_ptr<Cassette> load(const std::filesystem::path& path);

  std::optional<CassetteEntry> find(const std::string& key) const;
  /// Adds the entry unless the key is present; appends to the sink file when
  /// one is attached.
  void add(CassetteEntry entry);
  std::size_t size() const;
  /// Attach a file that receives every subsequently added entry.
  void append_to(const std::filesystem::path& path);
  /// Rewrite all entries to `path` in insertion order.
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::size_t> index_;
  std::vector<CassetteEntry> entries_;
  std::optional<std::filesystem::path> sink_;
};

/// Serves completions from a cassette; a miss throws ReplayError.
class ReplayChatBackend final : public ChatBackend {
 public:
  ReplayChatBackend(std::shared_ptr<const Cassette> cassette, std::string backend_id)
      : cassette_(std::move(cassette)), id_(std::move(backend_id)) {}
  std::string id() const override { return id_; }
  Completion complete(const ChatPrompt& prompt) override;

 private:
  std::shared_ptr<const Cassette> cassette_;
  std::string id_;
};

class ReplayPerplexity final : public PerplexityProvider {
 public:
  ReplayPerplexity(std::shared_ptr<const Cassette> cassette, std::string provider_id)
      : cassette_(std::move(cassette)), id_(std::move(provider_id)) {}
  std::string id() const override { return id_; }
  double perplexity(std::string_view context, std::string_view continuation) override;

 private:
  std::shared_ptr<const Cassette> cassette_;
  std::string id_;
};

/// Forwards to an inner backend and records every exchange.
class RecordingChatBackend final : public ChatBackend {
 public:
  RecordingChatBackend(std::shared_ptr<ChatBackend> inner, std::shared_ptr<Cassette> cassette)
      : inner_(std::move(inner)), cassette_(std::move(cassette)) {}
  std::string id() const override { return inner_->id(); }
  std::size_t context_budget() const override { return inner_->context_budget(); }
  Completion complete(const ChatPrompt& prompt) override;

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::shared_ptr<Cassette> cassette_;
};

class RecordingPerplexity final : public PerplexityProvider {
 public:
  RecordingPerplexity(std::shared_ptr<PerplexityProvider> inner, std::shared_ptr<Cassette> cassette)
      : inner_(std::move(inner)), cassette_(std::move(cassette)) {}
  std::string id() const override { return inner_->id(); }
  double perplexity(std::string_view context, std::string_view continuation) override;

 private:
  std::shared_ptr<PerplexityProvider> inner_;
  std::shared_ptr<Cassette> cassette_;
};

// ---------------------------------------------------------------------------
// Deterministic providers

/// exp(edit distance / longer length): 1 for identical strings, e for
/// completely different strings of equal length.
class MockPerplexity final : public PerplexityProvider {
 public:
  explicit MockPerplexity(std::string provider_id = "mock") : id_(std::move(provider_id)) {}
  std::string id() const override { return id_; }
  double perplexity(std::string_view context, std::string_view continuation) override;

 private:
  std::string id_;
};

/// Table lookup keyed by (context, continuation) with an optional default.
class ScriptedPerplexity final : public PerplexityProvider {
 public:
  explicit ScriptedPerplexity(std::optional<double> fallback = std::nullopt, std::string provider_id = "mock")
      : fallback_(fallback), id_(std::move(provider_id)) {}
  void set(std::string context, std::string continuation, double ppl);
  std::string id() const override { return id_; }
  double perplexity(std::string_view context, std::string_view continuation) override;

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  std::optional<double> fallback_;
  std::string id_;
};

/// Returns scripted completions in order; throws ProviderError when exhausted.
class SequenceChatBackend final : public ChatBackend {
 public:
  explicit SequenceChatBackend(std::vector<std::string> replies, std::string backend_id = "sequence")
      : replies_(std::move(replies)), id_(std::move(backend_id)) {}
  std::string id() const override { return id_; }
  std::size_t context_budget() const override { return budget_; }
  void set_context_budget(std::size_t budget) { budget_ = budget; }
  Completion complete(const ChatPrompt& prompt) override;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::size_t budget_ = kDefaultBudget;
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
  std::string id_;
};

}  // namespace kgqa::llm
