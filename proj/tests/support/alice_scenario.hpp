// SPDX-License-Identifier: Apache-2.0
//
// The "Alice Walker" scenario shared by the dialogue tests and the acceptance
// runner: two people with the same name, a symmetric perplexity model, and
// rule-based agent / user / generator models behind a cassette.
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "kgqa/dialogue.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/mock.hpp"
#include "kgqa/pipeline.hpp"

namespace kgqa::scenario {

inline const std::filesystem::path kFixtureDir = KGQA_FIXTURE_DIR;
inline const std::filesystem::path kPromptDir = KGQA_PROMPTS_DIR;
inline const std::filesystem::path kAliceCassette = kFixtureDir / "alice_cassette.jsonl";

inline constexpr const char* kAliceQuestion = "What was Alice Walker famous for?";
inline constexpr const char* kAliceGold = "SELECT DISTINCT ?x WHERE { ns:m.0aw1 ns:common.topic.notable_for ?x . }";
inline constexpr const char* kAliceId = "alice-1";
// Every perplexity is the same, so equally popular candidates are tied.
inline constexpr double kSymmetricPpl = 10.0;

inline KnowledgeGraph alice_graph() {
  return load_graph(kFixtureDir / "alice_triples.tsv", kFixtureDir / "alice_entities.jsonl");
}

struct AliceRun {
  dialogue::Transcript transcript;
  pipeline::UnAmbItem unamb;
};

struct AliceModels {
  std::shared_ptr<llm::ChatBackend> agent;
  std::shared_ptr<llm::ChatBackend> user;
  std::shared_ptr<llm::ChatBackend> generator;
  std::shared_ptr<llm::PerplexityProvider> ppl;
};

/// Live rule-based models recording into `cassette`.
inline AliceModels recording_models(const KnowledgeGraph& g, std::shared_ptr<llm::Cassette> cassette) {
  auto agent = std::make_shared<mock::AgentBackend>(g, std::map<std::string, std::string>{{kAliceQuestion, kAliceGold}});
  auto user = std::make_shared<mock::UserBackend>(&g);
  auto gen = std::make_shared<mock::GeneratorBackend>();
  auto ppl = std::make_shared<llm::ScriptedPerplexity>(kSymmetricPpl);
  return {std::make_shared<llm::RecordingChatBackend>(agent, cassette),
          std::make_shared<llm::RecordingChatBackend>(user, cassette),
          std::make_shared<llm::RecordingChatBackend>(gen, cassette),
          std::make_shared<llm::RecordingPerplexity>(ppl, cassette)};
}

/// Offline models served from a cassette.
inline AliceModels replay_models(std::shared_ptr<const llm::Cassette> cassette) {
  return {std::make_shared<llm::ReplayChatBackend>(cassette, "mock"),
          std::make_shared<llm::ReplayChatBackend>(cassette, "mock"),
          std::make_shared<llm::ReplayChatBackend>(cassette, "mock"),
          std::make_shared<llm::ReplayPerplexity>(cassette, "mock")};
}

inline AliceRun run_alice(const KnowledgeGraph& g, const dialogue::PromptSet& prompts, AliceModels models) {
  BayesianScorer scorer(*models.ppl);
  dialogue::SimulatedClarifier clarifier(kAliceGold, *models.user, prompts);
  AliceRun run;
  run.transcript = dialogue::run_session(kAliceQuestion, dialogue::SessionConfig{}, *models.agent, scorer, g, clarifier,
                                         prompts, std::string(kAliceGold));
  run.transcript.item_id = kAliceId;
  run.unamb = pipeline::build_unambiguous_item(run.transcript, *models.generator, prompts);
  return run;
}

}  // namespace kgqa::scenario
