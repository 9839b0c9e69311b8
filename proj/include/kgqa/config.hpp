// SPDX-License-Identifier: Apache-2.0
//
// Runtime configuration (a `key = value` file plus environment overrides)
// and construction of the model backends for each mode:
//
//   remote  OpenAI-compatible HTTP endpoints
//   record  live models, every call appended to the cassette
//   replay  cassette only; a miss is an error
//   mock    rule-based offline models
#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "kgqa/ambiguity.hpp"
#include "kgqa/dialogue.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"

namespace kgqa {

enum class Mode { remote, record, replay, mock };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);

struct AppConfig {
  Mode mode = Mode::mock;
  std::string base_url;
  std::string model = "mock";
  std::string ppl_model = "mock";
  std::string api_key;
  std::filesystem::path cassette = "cassette.jsonl";
  std::filesystem::path triples;
  std::filesystem::path entities;
  std::filesystem::path prompts = "prompts";
  Thresholds thresholds;
  std::size_t turn_budget = 10;
  std::size_t tool_k = 10;
  int max_retries = 3;
  int max_in_flight = 4;
  int port = 8080;

  dialogue::SessionConfig session() const { return {thresholds, turn_budget, tool_k}; }
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

/// Applies `key = value` lines ('#' starts a comment). Unknown keys and bad
/// values throw InvalidArgument naming the line.
void apply_config_text(AppConfig& config, std::string_view text, std::string_view origin = "config");

/// Defaults, then the file (when given), then LLM_MODE, LLM_BASE_URL,
/// LLM_MODEL, LLM_API_KEY and PPL_MODEL from the environment.
AppConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env = process_env);

/// The three chat roles and the perplexity provider, kept alive together.
struct Models {
  std::shared_ptr<llm::ChatBackend> agent;
  std::shared_ptr<llm::ChatBackend> user;
  std::shared_ptr<llm::ChatBackend> generator;
  std::shared_ptr<llm::PerplexityProvider> ppl;
  std::shared_ptr<llm::Cassette> cassette;  // record / replay modes
};

/// `gold_by_question` feeds the rule-based agent (mock mode, or record mode
/// without a base URL).
Models make_models(const AppConfig& config, const KnowledgeGraph& graph,
                   std::map<std::string, std::string> gold_by_question = {});

}  // namespace kgqa
