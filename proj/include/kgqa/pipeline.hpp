// SPDX-License-Identifier: Apache-2.0
//
// Batch evaluation (F1 / RHits@1 / EM), threshold sweeps, regeneration of
// unambiguous questions from clarification transcripts, and their summary
// statistics.
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/dialogue.hpp"

namespace kgqa::pipeline {

using json = nlohmann::json;

inline constexpr std::array<std::string_view, 6> kCategories = {"1-hop", "2-hop", "Conj", "Compo", "Compa", "Super"};

struct EvalItem {
  std::string id;
  std::string question;
  std::string golden_sparql;
  std::string category;
};

/// JSON Lines {id, question, sparql, category}. Throws LoadError for bad
/// lines, unknown categories, duplicate ids or gold queries that fail to parse.
std::vector<EvalItem> load_dataset(const std::filesystem::path& path);

struct ItemScore {
  double f1 = 0.0;
  double rhits1 = 0.0;
  int em = 0;
};

/// Set-based scores over canonical answer strings. RHits@1 is the expected
/// hit of one uniformly drawn prediction, i.e. precision. Throws
/// InvalidArgument for an empty gold set.
ItemScore score_item(const std::set<std::string>& predicted, const std::set<std::string>& gold);

/// Canonical strings of the first column.
std::set<std::string> answer_set(const sparql::ResultTable& table);

struct ItemResult {
  std::string id;
  std::string category;
  ItemScore score;
  std::string status;
  std::string failure_reason;
  int n_entity_clar = 0;
  int n_intent_clar = 0;
};

struct Aggregate {
  std::size_t n = 0;
  double f1 = 0.0;
  double rhits1 = 0.0;
  double em = 0.0;
  double mean_entity_clar = 0.0;
  double mean_intent_clar = 0.0;
};

struct MetricsReport {
  std::vector<ItemResult> per_item;  // sorted by id
  std::map<std::string, Aggregate> per_category;
  Aggregate overall;

  json to_json() const;
  /// id,category,f1,rhits1,em,status,n_entity_clar,n_intent_clar
  std::string per_item_csv() const;
};

/// Aggregates item results (unweighted means).
MetricsReport aggregate(std::vector<ItemResult> items);

/// Model-side collaborators of a batch run. All must tolerate concurrent calls
/// when items run in parallel.
struct Backends {
  llm::ChatBackend& agent;
  llm::ChatBackend& user;
  AmbiguityScorer& scorer;
};

struct EvalOptions {
  dialogue::SessionConfig session;
  /// Parallel runs items across OpenMP threads; results are identical.
  sparql::ExecutionPolicy policy = sparql::ExecutionPolicy::parallel;
};

struct Evaluation {
  MetricsReport report;
  std::vector<dialogue::Transcript> transcripts;  // sorted by item id
};

/// One simulated-user session per item. Item failures score 0 and never abort
/// the batch.
Evaluation evaluate_dataset(const std::vector<EvalItem>& items, const EvalOptions& options, Backends& backends,
                            const KnowledgeGraph& graph, const dialogue::PromptSet& prompts);

struct GridPoint {
  std::string axis;  // "entity" or "intent": the threshold being swept
  double entity_threshold = 0.0;
  double intent_threshold = 0.0;
  double overall_f1 = 0.0;
  double mean_clarification_rounds = 0.0;
  double mean_entity_rounds = 0.0;
  double mean_intent_rounds = 0.0;
};

/// "lo:hi:step" inclusive, values rounded to 1e-9. Throws InvalidArgument.
std::vector<double> parse_grid(std::string_view range);

/// One-dimensional sweeps: each entity threshold with the intent threshold
/// at `fixed`, then each intent threshold with the entity threshold at `fixed`.
std::vector<GridPoint> grid_search(const std::vector<EvalItem>& items, const std::vector<double>& entity_grid,
                                   const std::vector<double>& intent_grid, const EvalOptions& options,
                                   Backends& backends, const KnowledgeGraph& graph,
                                   const dialogue::PromptSet& prompts, double fixed = 0.5);

/// entity_t,intent_t,f1,mean_rounds
std::string grid_csv(const std::vector<GridPoint>& points);

struct UnAmbItem {
  std::string id;
  std::string original_question;
  std::string refined_question;
  std::string golden_sparql;
  int n_entity_clar = 0;
  int n_intent_clar = 0;
  bool regenerated = false;

  json to_json() const;
  static UnAmbItem from_json(const json& j);
};

/// (request, response) pairs of the AskForClarification turns.
std::vector<std::pair<std::string, std::string>> clarification_pairs(const dialogue::Transcript& transcript);

llm::ChatPrompt build_generation_prompt(std::string_view golden_sparql,
                                        const std::vector<std::pair<std::string, std::string>>& pairs,
                                        const dialogue::PromptSet& prompts);

/// Regenerates the question from the gold query and the clarification
/// exchange; transcripts without clarifications keep the original question.
UnAmbItem build_unambiguous_item(const dialogue::Transcript& transcript, llm::ChatBackend& backend,
                                 const dialogue::PromptSet& prompts);

struct DatasetStats {
  double avg_entity = 0.0;
  double avg_intent = 0.0;
  std::size_t n_regen = 0;
  double percent_regen = 0.0;  // rounded to 2 decimals
  std::size_t n_items = 0;
};

/// Averages over all items. Throws InvalidArgument for an empty list.
DatasetStats dataset_stats(const std::vector<UnAmbItem>& items);

/// Header "Ave. #Entity,Ave. #Intent,#Item,Percent" and one row.
std::string stats_csv(const DatasetStats& stats);

struct ScoreBin {
  std::string kind;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Histogram of every ambiguity score in the transcripts, per kind.
std::vector<ScoreBin> score_distribution(const std::vector<dialogue::Transcript>& transcripts, std::size_t bins = 10);
std::string distribution_csv(const std::vector<ScoreBin>& bins);

/// A JSON Lines file or a directory of *.json / *.jsonl transcript files.
std::vector<dialogue::Transcript> load_transcripts(const std::filesystem::path& path);
void save_transcripts(const std::vector<dialogue::Transcript>& transcripts, const std::filesystem::path& jsonl_path);

}  // namespace kgqa::pipeline
