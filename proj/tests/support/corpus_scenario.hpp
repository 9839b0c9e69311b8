// SPDX-License-Identifier: Apache-2.0
//
// The 50-question corpus with rule-based models, plus a four-transcript set
// with a hand-countable clarification profile.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "alice_scenario.hpp"
#include "kgqa/mock.hpp"
#include "kgqa/pipeline.hpp"

namespace kgqa::scenario {

inline KnowledgeGraph corpus_graph() {
  return load_graph(kFixtureDir / "corpus_triples.tsv", kFixtureDir / "corpus_entities.jsonl");
}

inline std::vector<pipeline::EvalItem> corpus_items() { return pipeline::load_dataset(kFixtureDir / "corpus_dataset.jsonl"); }

inline std::map<std::string, std::string> gold_by_question(const std::vector<pipeline::EvalItem>& items) {
  std::map<std::string, std::string> out;
  for (const auto& it : items) out.emplace(it.question, it.golden_sparql);
  return out;
}

/// Rule-based agent and user with every ambiguity score pinned.
struct PinnedRig {
  PinnedRig(const KnowledgeGraph& g, const std::vector<pipeline::EvalItem>& items, double entity, double intent)
      : agent(g, gold_by_question(items)), user(&g), scorer(entity, intent) {}
  pipeline::Backends backends() { return {agent, user, scorer}; }

  mock::AgentBackend agent;
  mock::UserBackend user;
  PinnedScorer scorer;
};

namespace detail {

inline dialogue::Turn clarified_turn(const std::string& request, const std::string& response) {
  dialogue::Turn t;
  t.action.kind = dialogue::ActionKind::tool_call;
  t.action.tool = Tool::ask_for_clarification;
  t.action.args = {request};
  t.clarification = response;
  return t;
}

}  // namespace detail

/// Four finished transcripts: two entity clarifications in the first, two
/// intent clarifications in the second, none in the other two. Expected
/// statistics: 0.5 entity and 0.5 intent rounds per item, 2 regenerated, 50%.
inline std::vector<dialogue::Transcript> four_transcripts() {
  std::vector<dialogue::Transcript> out(4);
  const char* questions[] = {"Which Alice Walker wrote a novel?", "What is Alice Walker known for?",
                             "When was the 1908 Summer Olympics?", "What sport is fencing?"};
  for (int i = 0; i < 4; ++i) {
    auto& t = out[i];
    t.item_id = "t" + std::to_string(i + 1);
    t.golden_sparql = kAliceGold;
    t.session.question = questions[i];
    t.session.status = dialogue::Status::finished;
  }
  out[0].session.history = {detail::clarified_turn("Which \"Alice Walker\"?", "Alice Walker (m.0aw1)"),
                            detail::clarified_turn("The novelist or the poet?", "The novelist.")};
  out[0].session.clarification_count_entity = 2;
  out[1].session.history = {detail::clarified_turn("Which relation do you mean?", "notable for"),
                            detail::clarified_turn("Fame or awards?", "Fame.")};
  out[1].session.clarification_count_intent = 2;
  return out;
}

}  // namespace kgqa::scenario
