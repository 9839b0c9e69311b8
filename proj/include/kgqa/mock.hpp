// SPDX-License-Identifier: Apache-2.0
//
// Rule-based stand-ins for the three model roles, used offline (mode "mock")
// and to record fixture cassettes. They read the same prompts a real model
// would get and answer deterministically.
#pragma once

#include <map>
#include <string>

#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"

namespace kgqa::mock {

/// QA agent that follows the gold query of a known question: look up each
/// gold entity by name, inspect the first entity's relations, ask whenever an
/// ambiguity hint appears, then answer with the gold query.
class AgentBackend final : public llm::ChatBackend {
 public:
  /// `gold_by_question` maps question text to its gold SPARQL.
  AgentBackend(const KnowledgeGraph& graph, std::map<std::string, std::string> gold_by_question,
               std::string backend_id = "mock")
      : graph_(graph), gold_(std::move(gold_by_question)), id_(std::move(backend_id)) {}
  std::string id() const override { return id_; }
  llm::Completion complete(const llm::ChatPrompt& prompt) override;

 private:
  const KnowledgeGraph& graph_;
  std::map<std::string, std::string> gold_;
  std::string id_;
};

/// Dummy user: picks the candidate in the request whose id occurs in the
/// gold query and answers with its name.
class UserBackend final : public llm::ChatBackend {
 public:
  explicit UserBackend(const KnowledgeGraph* graph = nullptr, std::string backend_id = "mock")
      : graph_(graph), id_(std::move(backend_id)) {}
  std::string id() const override { return id_; }
  llm::Completion complete(const llm::ChatPrompt& prompt) override;

 private:
  const KnowledgeGraph* graph_;
  std::string id_;
};

/// Question regenerator: folds the clarification responses into a question.
class GeneratorBackend final : public llm::ChatBackend {
 public:
  explicit GeneratorBackend(std::string backend_id = "mock") : id_(std::move(backend_id)) {}
  std::string id() const override { return id_; }
  llm::Completion complete(const llm::ChatPrompt& prompt) override;

 private:
  std::string id_;
};

}  // namespace kgqa::mock
