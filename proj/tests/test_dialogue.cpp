// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "alice_scenario.hpp"
#include "kgqa/dialogue.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kgqa;
using namespace kgqa::dialogue;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PromptSet tiny_prompts() {
  PromptSet p;
  p.instruction = "Answer the question.";
  p.user_simulator = "You are the user.";
  p.question_generation = "Rewrite the question.";
  return p;
}

class Collect {
 public:
  EventSink sink() {
    return [this](EventKind k, json payload) { events.push_back({k, std::move(payload)}); };
  }
  bool has(EventKind k) const {
    return std::any_of(events.begin(), events.end(), [&](const auto& e) { return e.first == k; });
  }
  std::vector<std::pair<EventKind, json>> events;
};

}  // namespace

TEST(ParseAction, ToolCall) {
  auto a = parse_action("Action: SearchNodes(\"alice walker\")");
  ASSERT_EQ(a.kind, ActionKind::tool_call);
  EXPECT_EQ(a.tool, Tool::search_nodes);
  EXPECT_EQ(a.args, std::vector<std::string>{"alice walker"});
  EXPECT_FALSE(a.thought);
}

TEST(ParseAction, ThoughtSpansLinesAndTwoArgs) {
  auto a = parse_action("Thought: first\nsecond\nAction: SearchGraphPattern(\"SELECT ?e WHERE { ?e ?p ?o }\", \"born\")");
  ASSERT_EQ(a.kind, ActionKind::tool_call);
  EXPECT_EQ(*a.thought, "first\nsecond");
  EXPECT_EQ(a.args.size(), 2u);
  EXPECT_EQ(a.args[1], "born");
}

TEST(ParseAction, DoneTakesTheRest) {
  auto a = parse_action("Thought: ok\nDone: SELECT ?x WHERE {\n  ns:m.1 ns:a.b.c ?x .\n}");
  ASSERT_EQ(a.kind, ActionKind::done);
  EXPECT_EQ(*a.final_sparql, "SELECT ?x WHERE {\n  ns:m.1 ns:a.b.c ?x .\n}");
}

TEST(ParseAction, InventedObservationIsCut) {
  auto a = parse_action("Action: SearchNodes(\"x\")\nObservation: made up");
  ASSERT_EQ(a.kind, ActionKind::tool_call);
  EXPECT_EQ(a.args[0], "x");
}

TEST(ParseAction, Malformed) {
  for (const char* text : {"", "   \n", "I think the answer is 42", "Action: Nope(\"x\")", "Action: SearchNodes()",
                           "Action: SearchNodes(\"a\", \"b\")", "Action: SearchNodes(\"unclosed)",
                           "Action: SearchNodes(\"x\") trailing", "Done:   ", "Thought: only thinking"}) {
    EXPECT_EQ(parse_action(text).kind, ActionKind::malformed) << text;
  }
}

TEST(ParseAction, FormatRoundTrip) {
  Action a;
  a.kind = ActionKind::tool_call;
  a.tool = Tool::ask_for_clarification;
  a.args = {"Which \"Alice\" do you mean?\nA \\ B"};
  a.thought = "ask";
  auto back = parse_action(format_action(a));
  back.raw = a.raw;
  EXPECT_EQ(back, a);
}

TEST(Prompts, LoadsShippedAssets) {
  auto p = PromptSet::load(scenario::kPromptDir);
  EXPECT_NE(p.instruction.find("AskForClarification"), std::string::npos);
  EXPECT_EQ(p.exemplars.size(), 2u);
  EXPECT_FALSE(p.user_simulator.empty());
  EXPECT_FALSE(p.question_generation.empty());
  EXPECT_THROW(PromptSet::load(scenario::kFixtureDir), NotFoundError);
}

TEST(Prompts, AgentPromptLayout) {
  auto p = tiny_prompts();
  p.exemplars = {"ex1", "ex2", "ex3"};
  p.max_exemplars = 2;
  SessionState s;
  s.question = "Q?";
  Turn t;
  t.action = parse_action("Action: AskForClarification(\"which?\")");
  t.clarification = "that one";
  s.history.push_back(t);
  auto prompt = build_agent_prompt(s, p);
  EXPECT_EQ(prompt.system, "Answer the question.");
  ASSERT_EQ(prompt.exemplars.size(), 2u);
  EXPECT_EQ(prompt.exemplars[0].role, llm::Role::example);
  ASSERT_EQ(prompt.turns.size(), 3u);
  EXPECT_EQ(prompt.turns[0].text, "Question: Q?");
  EXPECT_EQ(prompt.turns[1].role, llm::Role::agent);
  EXPECT_EQ(prompt.turns[2].text, "Clarification: that one");
}

TEST(Loop, MalformedOutputGetsCorrectiveObservation) {
  auto g = scenario::alice_graph();
  llm::SequenceChatBackend agent({"no idea", "Action: SearchNodes(\"Fencing\")"});
  SessionState s;
  s.question = "q";
  Collect c;
  auto a = next_action(s, tiny_prompts(), agent, c.sink());
  EXPECT_EQ(a.kind, ActionKind::tool_call);
  ASSERT_EQ(s.history.size(), 1u);
  EXPECT_EQ(*s.history[0].observation, kInvalidActionObservation);
  EXPECT_EQ(s.status, Status::running);
}

TEST(Loop, ParseAttemptsExhaust) {
  llm::SequenceChatBackend agent({"a", "b", "c", "d"});
  SessionState s;
  s.question = "q";
  next_action(s, tiny_prompts(), agent);
  EXPECT_EQ(s.status, Status::failed);
  EXPECT_EQ(s.failure_reason, "action-parse-exhausted");
  EXPECT_EQ(agent.calls(), kMaxParseAttempts);
}

TEST(Loop, BackendErrorFailsSession) {
  llm::SequenceChatBackend agent({});
  SessionState s;
  s.question = "q";
  Collect c;
  next_action(s, tiny_prompts(), agent, c.sink());
  EXPECT_EQ(s.status, Status::failed);
  EXPECT_TRUE(c.has(EventKind::error));
}

TEST(Loop, TurnBudget) {
  auto g = scenario::alice_graph();
  std::vector<std::string> replies(20, "Action: SearchNodes(\"Fencing\")");
  llm::SequenceChatBackend agent(replies);
  llm::ScriptedPerplexity ppl(1.0);
  BayesianScorer scorer(ppl);
  SessionConfig cfg;
  cfg.turn_budget = 3;
  struct NoClarifier : Clarifier {
    std::string respond(const SessionState&, std::string_view) override { return "x"; }
  } clarifier;
  auto t = run_session("q", cfg, agent, scorer, g, clarifier, tiny_prompts());
  EXPECT_EQ(t.session.status, Status::failed);
  EXPECT_EQ(t.session.failure_reason, "budget");
  EXPECT_EQ(t.session.history.size(), 3u);
}

TEST(Loop, AskSuspendsAndResumeCounts) {
  auto g = scenario::alice_graph();
  llm::ScriptedPerplexity ppl(scenario::kSymmetricPpl);
  BayesianScorer scorer(ppl);
  ToolContext tools{g, Thresholds{}, scorer};
  SessionState s;
  s.question = "What was Alice Walker famous for?";
  Collect c;

  step(s, parse_action("Action: SearchNodes(\"alice walker\")"), tools, c.sink());
  ASSERT_EQ(s.history.size(), 1u);
  const auto& obs = *s.history[0].observation;
  EXPECT_NE(obs.find("British fencer"), std::string::npos);
  EXPECT_NE(obs.find("The Color Purple"), std::string::npos);
  EXPECT_NE(obs.find("[Ambiguity hint] entity ambiguity score 1.000 >= threshold 0.6"), std::string::npos);
  EXPECT_EQ(s.last_hint, AmbiguityKind::entity);
  EXPECT_TRUE(c.has(EventKind::hint));

  EXPECT_THROW(resume(s, "too early"), StateError);
  step(s, parse_action("Action: AskForClarification(\"Which Alice Walker do you mean: the fencer or the author?\")"),
       tools, c.sink());
  EXPECT_EQ(s.status, Status::awaiting_clarification);
  EXPECT_TRUE(c.has(EventKind::clarification_request));
  EXPECT_THROW(step(s, parse_action("Action: SearchNodes(\"x\")"), tools), StateError);
  EXPECT_THROW(resume(s, "  "), InvalidArgument);

  resume(s, "The American author.", c.sink());
  EXPECT_EQ(s.status, Status::running);
  EXPECT_EQ(s.clarification_count_entity, 1);
  EXPECT_EQ(s.clarification_count_intent, 0);
  EXPECT_EQ(*s.history.back().clarification, "The American author.");
}

TEST(Loop, BadFinalQueryKeepsRunning) {
  auto g = scenario::alice_graph();
  llm::ScriptedPerplexity ppl(1.0);
  BayesianScorer scorer(ppl);
  ToolContext tools{g, Thresholds{}, scorer};
  SessionState s;
  s.question = "q";
  step(s, parse_action("Done: SELECT WHERE"), tools);
  EXPECT_EQ(s.status, Status::running);
  EXPECT_TRUE(s.history.back().observation->starts_with("Error:"));
  step(s, parse_action(std::string("Done: ") + scenario::kAliceGold), tools);
  EXPECT_EQ(s.status, Status::finished);
  ASSERT_TRUE(s.answers);
  EXPECT_EQ(pipeline::answer_set(*s.answers), std::set<std::string>{"m.0cpb"});
}

TEST(UserSimulator, ReplaysRecordedAnswerVerbatim) {
  auto prompts = tiny_prompts();
  auto cassette = std::make_shared<llm::Cassette>();
  auto request = "Which Alice Walker do you mean: the fencer or the author?";
  auto prompt = build_user_prompt(scenario::kAliceGold, request, prompts);
  json req = {{"prompt", prompt.to_json()}};
  cassette->add({llm::cassette_key("mock", req), "chat", req, {{"text", "The American author."}}});
  llm::ReplayChatBackend backend(cassette, "mock");
  EXPECT_EQ(simulate_user(scenario::kAliceGold, request, backend, prompts), "The American author.");
  EXPECT_THROW(simulate_user(scenario::kAliceGold, "something else?", backend, prompts), ReplayError);
}

TEST(Transcript, JsonRoundTrip) {
  auto g = scenario::alice_graph();
  auto prompts = PromptSet::load(scenario::kPromptDir);
  auto run = scenario::run_alice(g, prompts, scenario::replay_models(llm::Cassette::load(scenario::kAliceCassette)));
  auto j = run.transcript.to_json(false);
  auto back = Transcript::from_json(j);
  EXPECT_EQ(back.to_json(false).dump(), j.dump());
}

// The full scenario, served offline from the committed cassette.
TEST(AliceWalker, EndToEndFromCassette) {
  auto g = scenario::alice_graph();
  auto prompts = PromptSet::load(scenario::kPromptDir);
  auto cassette = llm::Cassette::load(scenario::kAliceCassette);
  ASSERT_GT(cassette->size(), 0u);
  auto run = scenario::run_alice(g, prompts, scenario::replay_models(cassette));
  const auto& s = run.transcript.session;

  ASSERT_EQ(s.status, Status::finished) << s.failure_reason;
  ASSERT_FALSE(s.reports.empty());
  EXPECT_EQ(s.reports[0].kind, AmbiguityKind::entity);
  EXPECT_NEAR(s.reports[0].score, 1.0, 1e-12);
  EXPECT_TRUE(s.reports[0].needs_clarification);
  EXPECT_EQ(s.clarification_count_entity, 1);

  auto suspended = std::find_if(run.transcript.events.begin(), run.transcript.events.end(),
                                [](const Event& e) { return e.kind == EventKind::clarification_request; });
  ASSERT_NE(suspended, run.transcript.events.end());
  EXPECT_EQ((suspended + 1)->kind, EventKind::clarification_response);
  EXPECT_EQ((suspended + 1)->payload["text"], "Alice Walker (m.0aw1)");

  auto gold = pipeline::answer_set(sparql::execute(sparql::parse(scenario::kAliceGold), g));
  auto score = pipeline::score_item(pipeline::answer_set(*s.answers), gold);
  EXPECT_DOUBLE_EQ(score.f1, 1.0);
  EXPECT_EQ(score.em, 1);
  EXPECT_TRUE(run.unamb.regenerated);
}

TEST(AliceWalker, ReplayIsByteIdentical) {
  auto g = scenario::alice_graph();
  auto prompts = PromptSet::load(scenario::kPromptDir);
  auto cassette = llm::Cassette::load(scenario::kAliceCassette);
  auto a = scenario::run_alice(g, prompts, scenario::replay_models(cassette));
  auto b = scenario::run_alice(g, prompts, scenario::replay_models(cassette));
  EXPECT_EQ(a.transcript.to_json(false).dump(2), b.transcript.to_json(false).dump(2));
  EXPECT_EQ(a.unamb.to_json().dump(), b.unamb.to_json().dump());
}

// Re-recording with the rule-based models must reproduce the committed file.
// KGQA_UPDATE_FIXTURES=1 rewrites it instead.
TEST(AliceWalker, CassetteRegeneratesExactly) {
  auto g = scenario::alice_graph();
  auto prompts = PromptSet::load(scenario::kPromptDir);
  auto out = fs::temp_directory_path() / ("alice_cassette_" + std::to_string(::getpid()) + ".jsonl");
  fs::remove(out);
  auto cassette = std::make_shared<llm::Cassette>();
  cassette->append_to(out);
  scenario::run_alice(g, prompts, scenario::recording_models(g, cassette));
  auto fresh = slurp(out);
  fs::remove(out);
  if (std::getenv("KGQA_UPDATE_FIXTURES")) {
    std::ofstream(scenario::kAliceCassette, std::ios::binary | std::ios::trunc) << fresh;
  }
  EXPECT_EQ(fresh, slurp(scenario::kAliceCassette)) << "rerun with KGQA_UPDATE_FIXTURES=1 to refresh the fixture";
}
