// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <unistd.h>

#include <fstream>
#include <random>

#include "corpus_scenario.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/pipeline.hpp"

namespace fs = std::filesystem;
using namespace kgqa;
using namespace kgqa::pipeline;

TEST(ScoreItem, Contracts) {
  std::set<std::string> ab = {"a", "b"}, bc = {"b", "c"};
  auto id = score_item(ab, ab);
  EXPECT_EQ(id.f1, 1.0);
  EXPECT_EQ(id.rhits1, 1.0);
  EXPECT_EQ(id.em, 1);
  auto empty = score_item({}, ab);
  EXPECT_EQ(empty.f1, 0.0);
  EXPECT_EQ(empty.rhits1, 0.0);
  EXPECT_EQ(empty.em, 0);
  auto half = score_item(ab, bc);
  EXPECT_DOUBLE_EQ(half.f1, 0.5);
  EXPECT_DOUBLE_EQ(half.rhits1, 0.5);
  EXPECT_EQ(half.em, 0);
  EXPECT_THROW(score_item(ab, {}), InvalidArgument);
}

TEST(ScoreItem, RHitsIsPrecision) {
  std::mt19937_64 rng(23);
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 1000; ++t) {
    std::set<std::string> pred, gold;
    for (int i = 0; i < 12; ++i) {
      if (coin(rng)) pred.insert(std::to_string(i));
      if (coin(rng)) gold.insert(std::to_string(i));
    }
    if (gold.empty()) gold.insert("0");
    std::size_t hits = 0;
    for (const auto& p : pred) hits += gold.count(p);
    double precision = pred.empty() ? 0.0 : static_cast<double>(hits) / pred.size();
    ASSERT_DOUBLE_EQ(score_item(pred, gold).rhits1, precision);
  }
}

TEST(Dataset, LoadsCorpusAndRejectsBadLines) {
  auto items = scenario::corpus_items();
  EXPECT_EQ(items.size(), 50u);
  auto path = fs::temp_directory_path() / ("bad_dataset_" + std::to_string(::getpid()) + ".jsonl");
  std::ofstream(path) << R"({"id":"a","question":"q","sparql":"SELECT ?x WHERE { ?x ?p ?o }","category":"1-hop"})"
                      << "\n"
                      << R"({"id":"b","question":"q","sparql":"SELECT ?x WHERE { ?x ?p ?o }","category":"4-hop"})"
                      << "\n";
  try {
    load_dataset(path);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  fs::remove(path);
}

TEST(Evaluate, CorpusWithRuleBasedModels) {
  auto g = scenario::corpus_graph();
  auto items = scenario::corpus_items();
  scenario::PinnedRig rig(g, items, 0.7, 0.7);
  auto b = rig.backends();
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  auto ev = evaluate_dataset(items, EvalOptions{}, b, g, prompts);
  EXPECT_EQ(ev.report.per_item.size(), 50u);
  EXPECT_EQ(ev.report.per_category.size(), 6u);
  EXPECT_DOUBLE_EQ(ev.report.overall.f1, 1.0);
  // Pinned at 0.7: entity hints fire under the 0.6 default, intent hints not under 0.8.
  EXPECT_GT(ev.report.overall.mean_entity_clar, 0.0);
  EXPECT_EQ(ev.report.overall.mean_intent_clar, 0.0);
  EXPECT_TRUE(std::is_sorted(ev.report.per_item.begin(), ev.report.per_item.end(),
                             [](const auto& x, const auto& y) { return x.id < y.id; }));
  auto csv = ev.report.per_item_csv();
  EXPECT_TRUE(csv.starts_with("id,category,f1,rhits1,em,status,n_entity_clar,n_intent_clar\n"));
  EXPECT_EQ(ev.report.to_json()["per_item"].size(), 50u);
}

TEST(Evaluate, SerialAndParallelAgree) {
  auto g = scenario::corpus_graph();
  auto items = scenario::corpus_items();
  scenario::PinnedRig rig(g, items, 0.7, 0.7);
  auto b = rig.backends();
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  EvalOptions serial, parallel;
  serial.policy = sparql::ExecutionPolicy::serial;
  auto a = evaluate_dataset(items, serial, b, g, prompts);
  auto c = evaluate_dataset(items, parallel, b, g, prompts);
  EXPECT_EQ(a.report.to_json().dump(), c.report.to_json().dump());
  ASSERT_EQ(a.transcripts.size(), c.transcripts.size());
  for (std::size_t i = 0; i < a.transcripts.size(); ++i) {
    EXPECT_EQ(a.transcripts[i].to_json(false).dump(), c.transcripts[i].to_json(false).dump());
  }
}

TEST(Evaluate, FailedItemsScoreZero) {
  auto g = scenario::corpus_graph();
  auto items = scenario::corpus_items();
  items.resize(3);
  llm::SequenceChatBackend agent({});  // every session fails at its first call
  scenario::PinnedRig rig(g, items, 0.7, 0.7);
  Backends b{agent, rig.user, rig.scorer};
  EvalOptions opts;
  opts.policy = sparql::ExecutionPolicy::serial;
  auto ev = evaluate_dataset(items, opts, b, g, dialogue::PromptSet::load(scenario::kPromptDir));
  EXPECT_EQ(ev.report.overall.f1, 0.0);
  for (const auto& r : ev.report.per_item) EXPECT_EQ(r.status, "failed");
}

TEST(Grid, ParseSpec) {
  EXPECT_EQ(parse_grid("0.5:0.9:0.1"), (std::vector<double>{0.5, 0.6, 0.7, 0.8, 0.9}));
  EXPECT_EQ(parse_grid("0.2,0.4"), (std::vector<double>{0.2, 0.4}));
  EXPECT_THROW(parse_grid("0.9:0.5:0.1"), InvalidArgument);
  EXPECT_THROW(parse_grid("0.5:0.9:0"), InvalidArgument);
  EXPECT_THROW(parse_grid("0.5:1.5:0.5"), InvalidArgument);
  EXPECT_THROW(parse_grid("x"), InvalidArgument);
}

TEST(Grid, RoundsFallAsThresholdsRise) {
  auto g = scenario::corpus_graph();
  auto items = scenario::corpus_items();
  scenario::PinnedRig rig(g, items, 0.7, 0.7);
  auto b = rig.backends();
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  auto grid = parse_grid("0.5:0.9:0.1");
  auto points = grid_search(items, grid, grid, EvalOptions{}, b, g, prompts);
  ASSERT_EQ(points.size(), 10u);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    bool entity_axis = i < 5;
    EXPECT_EQ(p.axis, entity_axis ? "entity" : "intent");
    EXPECT_EQ(entity_axis ? p.intent_threshold : p.entity_threshold, 0.5);
    double swept = entity_axis ? p.entity_threshold : p.intent_threshold;
    double swept_rounds = entity_axis ? p.mean_entity_rounds : p.mean_intent_rounds;
    if (swept > 0.7) {
      EXPECT_EQ(swept_rounds, 0.0) << swept;
    } else {
      EXPECT_GT(swept_rounds, 0.0) << swept;
    }
    if (i % 5) EXPECT_LE(p.mean_clarification_rounds, points[i - 1].mean_clarification_rounds);
  }
  EXPECT_TRUE(grid_csv(points).starts_with("entity_t,intent_t,f1,mean_rounds\n0.50,0.50,"));
}

TEST(Unambiguous, RegeneratesOnlyClarifiedItems) {
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  mock::GeneratorBackend gen;
  auto ts = scenario::four_transcripts();
  auto first = build_unambiguous_item(ts[0], gen, prompts);
  EXPECT_TRUE(first.regenerated);
  EXPECT_EQ(first.n_entity_clar, 2);
  EXPECT_EQ(first.refined_question, "Clarified question about Alice Walker (m.0aw1); The novelist.");
  auto last = build_unambiguous_item(ts[3], gen, prompts);
  EXPECT_FALSE(last.regenerated);
  EXPECT_EQ(last.refined_question, ts[3].session.question);
  EXPECT_EQ(UnAmbItem::from_json(first.to_json()).to_json(), first.to_json());
}

TEST(Unambiguous, GenerationPromptLeavesOutTheQuestion) {
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  auto ts = scenario::four_transcripts();
  auto p = build_generation_prompt(*ts[0].golden_sparql, clarification_pairs(ts[0]), prompts);
  ASSERT_EQ(p.turns.size(), 1u);
  EXPECT_EQ(p.turns[0].text, std::string("Golden SPARQL:\n") + scenario::kAliceGold +
                                 "\n\nInteraction:\nRequest: Which \"Alice Walker\"?\nResponse: Alice Walker "
                                 "(m.0aw1)\nRequest: The novelist or the poet?\nResponse: The novelist.");
  EXPECT_EQ(p.turns[0].text.find(ts[0].session.question), std::string::npos);
}

TEST(Unambiguous, ReplayedCassetteText) {
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  auto ts = scenario::four_transcripts();
  auto prompt = build_generation_prompt(*ts[0].golden_sparql, clarification_pairs(ts[0]), prompts);
  auto cassette = std::make_shared<llm::Cassette>();
  json req = {{"prompt", prompt.to_json()}};
  cassette->add({llm::cassette_key("mock", req), "chat", req, {{"text", "Which novel did the American author Alice Walker write?"}}});
  llm::ReplayChatBackend replay(cassette, "mock");
  auto u = build_unambiguous_item(ts[0], replay, prompts);
  EXPECT_EQ(u.refined_question, "Which novel did the American author Alice Walker write?");
}

TEST(Stats, FourTranscriptRow) {
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  mock::GeneratorBackend gen;
  std::vector<UnAmbItem> items;
  for (const auto& t : scenario::four_transcripts()) items.push_back(build_unambiguous_item(t, gen, prompts));
  auto st = dataset_stats(items);
  EXPECT_DOUBLE_EQ(st.avg_entity, 0.5);
  EXPECT_DOUBLE_EQ(st.avg_intent, 0.5);
  EXPECT_EQ(st.n_regen, 2u);
  EXPECT_DOUBLE_EQ(st.percent_regen, 50.0);
  EXPECT_EQ(stats_csv(st), "Ave. #Entity,Ave. #Intent,#Item,Percent\n0.50,0.50,2,50.00\n");
  EXPECT_THROW(dataset_stats({}), InvalidArgument);
}

TEST(Distribution, BinsReportScores) {
  auto g = scenario::alice_graph();
  auto prompts = dialogue::PromptSet::load(scenario::kPromptDir);
  auto run = scenario::run_alice(g, prompts, scenario::replay_models(llm::Cassette::load(scenario::kAliceCassette)));
  auto bins = score_distribution({run.transcript}, 10);
  ASSERT_EQ(bins.size(), 20u);
  EXPECT_EQ(bins[9].kind, "entity");
  EXPECT_EQ(bins[9].count, 1u);  // the tied pair scores exactly 1.0
  std::size_t total = 0;
  for (const auto& b : bins) total += b.count;
  EXPECT_EQ(total, run.transcript.session.reports.size());
  EXPECT_TRUE(distribution_csv(bins).starts_with("kind,bin_lo,bin_hi,count\nentity,0.00,0.10,0\n"));
}

TEST(Transcripts, SaveAndLoad) {
  auto path = fs::temp_directory_path() / ("transcripts_" + std::to_string(::getpid()) + ".jsonl");
  auto ts = scenario::four_transcripts();
  save_transcripts(ts, path);
  auto back = load_transcripts(path);
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t i = 0; i < ts.size(); ++i) EXPECT_EQ(back[i].to_json().dump(), ts[i].to_json().dump());
  fs::remove(path);
}
