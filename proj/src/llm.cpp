// SPDX-License-Identifier: Apache-2.0
#include "kgqa/llm.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa::llm {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::agent: return "agent";
    case Role::tool: return "tool";
    case Role::user: return "user";
    case Role::example: return "example";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  for (Role r : {Role::agent, Role::tool, Role::user, Role::example}) {
    if (to_string(r) == s) return r;
  }
  throw InvalidArgument("unknown role: " + std::string(s));
}

std::size_t ChatPrompt::serialized_length() const {
  std::size_t n = system.size();
  for (const auto& m : exemplars) n += m.text.size();
  for (const auto& m : turns) n += m.text.size();
  return n;
}

void ChatPrompt::validate() const {
  for (std::size_t i = 1; i < turns.size(); ++i) {
    if (turns[i].role == Role::agent && turns[i - 1].role == Role::agent) {
      throw InvalidArgument("prompt has consecutive agent turns at index " + std::to_string(i));
    }
  }
  for (const auto& m : turns) {
    if (m.role == Role::example) throw InvalidArgument("example role is reserved for exemplars");
  }
}

namespace {

json messages_json(const std::vector<Message>& ms) {
  json arr = json::array();
  for (const auto& m : ms) arr.push_back({{"role", to_string(m.role)}, {"text", m.text}});
  return arr;
}

std::vector<Message> messages_from(const json& arr) {
  std::vector<Message> out;
  for (const auto& m : arr) out.push_back({role_from_string(m.at("role").get<std::string>()), m.at("text")});
  return out;
}

json ppl_request(std::string_view context, std::string_view continuation) {
  return {{"context", context}, {"continuation", continuation}};
}

std::size_t rough_tokens(std::size_t chars) { return (chars + 3) / 4; }

}  // namespace

json ChatPrompt::to_json() const {
  return {{"system", system}, {"exemplars", messages_json(exemplars)}, {"turns", messages_json(turns)}};
}

ChatPrompt ChatPrompt::from_json(const json& j) {
  ChatPrompt p;
  p.system = j.at("system").get<std::string>();
  p.exemplars = messages_from(j.at("exemplars"));
  p.turns = messages_from(j.at("turns"));
  return p;
}

Completion complete(const ChatPrompt& prompt, ChatBackend& backend) {
  prompt.validate();
  auto length = prompt.serialized_length();
  if (length > backend.context_budget()) {
    throw BudgetError("prompt of " + std::to_string(length) + " characters exceeds the budget of " +
                      std::to_string(backend.context_budget()) + " for " + backend.id());
  }
  return backend.complete(prompt);
}

double perplexity(std::string_view context, std::string_view continuation, PerplexityProvider& provider) {
  if (continuation.empty()) throw InvalidArgument("perplexity needs a non-empty continuation");
  double v = provider.perplexity(context, continuation);
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ProviderError(provider.id() + " returned an invalid perplexity " + std::to_string(v));
  }
  return v;
}

std::string cassette_key(std::string_view backend_id, const json& request) {
  std::string material(backend_id);
  material.push_back('\n');
  material += request.dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

// ---------------------------------------------------------------------------

namespace {

json entry_json(const CassetteEntry& e) {
  return {{"key", e.key}, {"kind", e.kind}, {"request", e.request}, {"response", e.response}};
}

}  // namespace

std::shared_ptr<Cassette> Cassette::load(const std::filesystem::path& path) {
  auto cassette = std::make_shared<Cassette>();
  std::ifstream in(path);
  if (!in) return cassette;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      cassette->add({j.at("key"), j.at("kind"), j.at("request"), j.at("response")});
    } catch (const json::exception& e) {
      throw LoadError(path.string(), lineno, e.what());
    }
  }
  return cassette;
}

std::optional<CassetteEntry> Cassette::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

void Cassette::add(CassetteEntry entry) {
  std::lock_guard lock(mu_);
  if (index_.contains(entry.key)) return;
  if (sink_) {
    std::ofstream out(*sink_, std::ios::app);
    out << entry_json(entry).dump() << "\n";
    if (!out) throw Error("cannot append to cassette " + sink_->string());
  }
  index_.emplace(entry.key, entries_.size());
  entries_.push_back(std::move(entry));
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void Cassette::append_to(const std::filesystem::path& path) {
  std::lock_guard lock(mu_);
  sink_ = path;
}

void Cassette::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::ofstream out(path, std::ios::trunc);
  for (const auto& e : entries_) out << entry_json(e).dump() << "\n";
  if (!out) throw Error("cannot write cassette " + path.string());
}

Completion ReplayChatBackend::complete(const ChatPrompt& prompt) {
  json request = {{"prompt", prompt.to_json()}};
  auto key = cassette_key(id_, request);
  auto hit = cassette_->find(key);
  if (!hit || hit->kind != "chat") throw ReplayError(key);
  Completion c;
  c.text = hit->response.at("text").get<std::string>();
  c.usage = {rough_tokens(prompt.serialized_length()), rough_tokens(c.text.size())};
  c.backend_id = id_;
  return c;
}

double ReplayPerplexity::perplexity(std::string_view context, std::string_view continuation) {
  auto key = cassette_key(id_, ppl_request(context, continuation));
  auto hit = cassette_->find(key);
  if (!hit || hit->kind != "ppl") throw ReplayError(key);
  return hit->response.at("ppl").get<double>();
}

Completion RecordingChatBackend::complete(const ChatPrompt& prompt) {
  auto c = inner_->complete(prompt);
  json request = {{"prompt", prompt.to_json()}};
  cassette_->add({cassette_key(inner_->id(), request), "chat", request, {{"text", c.text}}});
  return c;
}

double RecordingPerplexity::perplexity(std::string_view context, std::string_view continuation) {
  double v = inner_->perplexity(context, continuation);
  auto request = ppl_request(context, continuation);
  cassette_->add({cassette_key(inner_->id(), request), "ppl", request, {{"ppl", v}}});
  return v;
}

// ---------------------------------------------------------------------------

double MockPerplexity::perplexity(std::string_view context, std::string_view continuation) {
  auto longest = std::max(context.size(), continuation.size());
  if (longest == 0) return 1.0;
  double d = static_cast<double>(text::edit_distance(context, continuation)) / static_cast<double>(longest);
  return std::exp(d);
}

void ScriptedPerplexity::set(std::string context, std::string continuation, double ppl) {
  if (!(ppl > 0.0)) throw InvalidArgument("scripted perplexity must be positive");
  table_[{std::move(context), std::move(continuation)}] = ppl;
}

double ScriptedPerplexity::perplexity(std::string_view context, std::string_view continuation) {
  auto it = table_.find({std::string(context), std::string(continuation)});
  if (it != table_.end()) return it->second;
  if (fallback_) return *fallback_;
  throw ProviderError("no scripted perplexity for context \"" + text::truncate_utf8(context, 60) + "\"");
}

Completion SequenceChatBackend::complete(const ChatPrompt& prompt) {
  std::lock_guard lock(mu_);
  if (next_ >= replies_.size()) throw ProviderError("scripted completions exhausted after " + std::to_string(next_));
  Completion c;
  c.text = replies_[next_++];
  c.usage = {rough_tokens(prompt.serialized_length()), rough_tokens(c.text.size())};
  c.backend_id = id_;
  return c;
}

std::size_t SequenceChatBackend::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

}  // namespace kgqa::llm
