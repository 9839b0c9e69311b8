// SPDX-License-Identifier: Apache-2.0
#include "kgqa/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kgqa/errors.hpp"
#include "kgqa/mock.hpp"
#include "kgqa/remote.hpp"
#include "kgqa/text.hpp"

namespace kgqa {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::remote: return "remote";
    case Mode::record: return "record";
    case Mode::replay: return "replay";
    case Mode::mock: return "mock";
  }
  return "mock";
}

Mode mode_from_string(std::string_view s) {
  for (Mode m : {Mode::remote, Mode::record, Mode::replay, Mode::mock}) {
    if (to_string(m) == s) return m;
  }
  throw InvalidArgument("unknown mode '" + std::string(s) + "' (remote, record, replay, mock)");
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

namespace {

double to_double(const std::string& v) {
  std::size_t used = 0;
  double d = std::stod(v, &used);
  if (used != v.size()) throw std::invalid_argument(v);
  return d;
}

long to_long(const std::string& v) {
  std::size_t used = 0;
  long n = std::stol(v, &used);
  if (used != v.size() || n < 0) throw std::invalid_argument(v);
  return n;
}

void set_key(AppConfig& c, const std::string& key, const std::string& v) {
  if (key == "mode") c.mode = mode_from_string(v);
  else if (key == "base_url") c.base_url = v;
  else if (key == "model") c.model = v;
  else if (key == "ppl_model") c.ppl_model = v;
  else if (key == "api_key") c.api_key = v;
  else if (key == "cassette") c.cassette = v;
  else if (key == "triples") c.triples = v;
  else if (key == "entities") c.entities = v;
  else if (key == "prompts") c.prompts = v;
  else if (key == "entity_threshold") c.thresholds.entity = to_double(v);
  else if (key == "intent_threshold") c.thresholds.intent = to_double(v);
  else if (key == "turn_budget") c.turn_budget = static_cast<std::size_t>(to_long(v));
  else if (key == "tool_k") c.tool_k = static_cast<std::size_t>(to_long(v));
  else if (key == "max_retries") c.max_retries = static_cast<int>(to_long(v));
  else if (key == "max_in_flight") c.max_in_flight = static_cast<int>(to_long(v));
  else if (key == "port") c.port = static_cast<int>(to_long(v));
  else throw InvalidArgument("unknown key '" + key + "'");
}

}  // namespace

void apply_config_text(AppConfig& config, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto trimmed = text::trim(line);
    if (trimmed.empty()) continue;
    auto where = std::string(origin) + ":" + std::to_string(lineno) + ": ";
    auto eq = trimmed.find('=');
    if (eq == std::string::npos) throw InvalidArgument(where + "expected key = value");
    auto key = text::trim(std::string_view(trimmed).substr(0, eq));
    auto value = text::trim(std::string_view(trimmed).substr(eq + 1));
    try {
      set_key(config, key, value);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(where + e.what());
    } catch (const std::logic_error&) {
      throw InvalidArgument(where + "bad value for " + key + ": '" + value + "'");
    }
  }
  config.thresholds.validate();
  if (config.turn_budget == 0 || config.tool_k == 0) throw InvalidArgument(std::string(origin) + ": budgets must be positive");
}

AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  AppConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw NotFoundError("config file not found: " + file->string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_config_text(c, ss.str(), file->string());
  }
  if (auto v = env("LLM_MODE")) c.mode = mode_from_string(*v);
  if (auto v = env("LLM_BASE_URL")) c.base_url = *v;
  if (auto v = env("LLM_MODEL")) c.model = *v;
  if (auto v = env("LLM_API_KEY")) c.api_key = *v;
  if (auto v = env("PPL_MODEL")) c.ppl_model = *v;
  return c;
}

Models make_models(const AppConfig& c, const KnowledgeGraph& graph, std::map<std::string, std::string> gold) {
  Models m;
  auto remote_config = [&](const std::string& model) {
    if (c.base_url.empty()) throw InvalidArgument("mode " + std::string(to_string(c.mode)) + " needs LLM_BASE_URL");
    llm::RemoteConfig r;
    r.base_url = c.base_url;
    r.model = model;
    r.api_key = c.api_key;
    r.max_retries = c.max_retries;
    r.max_in_flight = c.max_in_flight;
    return r;
  };
  auto live_remote = [&] {
    auto chat = std::make_shared<llm::RemoteChatBackend>(remote_config(c.model));
    m.agent = chat;
    m.user = chat;
    m.generator = chat;
    m.ppl = std::make_shared<llm::RemotePerplexity>(remote_config(c.ppl_model));
  };
  auto live_mock = [&] {
    m.agent = std::make_shared<mock::AgentBackend>(graph, std::move(gold), c.model);
    m.user = std::make_shared<mock::UserBackend>(&graph, c.model);
    m.generator = std::make_shared<mock::GeneratorBackend>(c.model);
    m.ppl = std::make_shared<llm::MockPerplexity>(c.ppl_model);
  };

  switch (c.mode) {
    case Mode::remote:
      live_remote();
      break;
    case Mode::mock:
      live_mock();
      break;
    case Mode::record: {
      if (c.base_url.empty()) {
        live_mock();
      } else {
        live_remote();
      }
      m.cassette = llm::Cassette::load(c.cassette);
      m.cassette->append_to(c.cassette);
      m.agent = std::make_shared<llm::RecordingChatBackend>(m.agent, m.cassette);
      m.user = std::make_shared<llm::RecordingChatBackend>(m.user, m.cassette);
      m.generator = std::make_shared<llm::RecordingChatBackend>(m.generator, m.cassette);
      m.ppl = std::make_shared<llm::RecordingPerplexity>(m.ppl, m.cassette);
      break;
    }
    case Mode::replay: {
      if (!std::filesystem::exists(c.cassette)) throw NotFoundError("cassette not found: " + c.cassette.string());
      m.cassette = llm::Cassette::load(c.cassette);
      auto chat = std::make_shared<llm::ReplayChatBackend>(m.cassette, c.model);
      m.agent = chat;
      m.user = chat;
      m.generator = chat;
      m.ppl = std::make_shared<llm::ReplayPerplexity>(m.cassette, c.ppl_model);
      break;
    }
  }
  return m;
}

}  // namespace kgqa
