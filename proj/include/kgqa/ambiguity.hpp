// SPDX-License-Identifier: Apache-2.0
//
// Clarification plugin. Entity and intent ambiguity are both scored as the
// normalized entropy of a Bayesian posterior over the candidates:
//
//   prior_i      = weight_i / sum(weight)        (uniform if all weights are 0)
//   likelihood   = softmax(1 / PPL_i)
//   posterior    = softmax(likelihood_i * prior_i)
//   score        = H(posterior) / ln N           (0 for N = 1)
//
// Entity weights are popularities; intent weights are predicate triple
// frequencies. When the score reaches the threshold a hint is appended to
// the tool observation.
#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/toolbox.hpp"

namespace kgqa {

struct Thresholds {
  double entity = 0.6;
  double intent = 0.8;

  /// Throws InvalidArgument unless both lie in [0,1].
  void validate() const;
};

enum class AmbiguityKind { entity, intent };

std::string_view to_string(AmbiguityKind kind);

struct AmbiguityReport {
  AmbiguityKind kind = AmbiguityKind::entity;
  std::vector<std::pair<std::string, double>> posterior;
  double score = 0.0;
  double threshold = 0.0;
  bool needs_clarification = false;
  std::string hint_text;  // empty unless needs_clarification
};

/// H / ln N with natural logs and 0 ln 0 = 0. Throws InvalidDistribution for
/// negative entries, non-finite entries or a sum off 1 by more than 1e-9.
double normalized_entropy(std::span<const double> distribution);

/// Posterior from prior weights and perplexities, as in the header comment.
std::vector<double> bayesian_posterior(std::span<const double> prior_weights, std::span<const double> perplexities);

/// Conditioning context for entity likelihoods.
std::string entity_context(const EntityRecord& record);

/// "<anchor name> <predicate label> <tail>." for intent likelihoods.
std::string verbalize(const KnowledgeGraph& graph, const PredicateCandidate& candidate);

/// Triple count of a plain predicate; for a composite path, of its last step.
std::size_t predicate_weight(const KnowledgeGraph& graph, std::string_view predicate);

/// Exact hint template appended to observations.
std::string hint_text(AmbiguityKind kind, double score, double threshold, const std::vector<std::string>& labels);

AmbiguityReport entity_ambiguity(std::string_view question, std::span<const EntityCandidate> candidates,
                                 llm::PerplexityProvider& ppl, double threshold = Thresholds{}.entity);

AmbiguityReport intent_ambiguity(std::string_view question, std::span<const PredicateCandidate> candidates,
                                 llm::PerplexityProvider& ppl, const KnowledgeGraph& graph,
                                 double threshold = Thresholds{}.intent);

/// Builds a report from an already computed posterior.
AmbiguityReport make_report(AmbiguityKind kind, std::vector<std::string> labels, std::vector<double> posterior,
                            double threshold);

/// Strategy used by the dialogue loop to score tool candidates.
class AmbiguityScorer {
 public:
  virtual ~AmbiguityScorer() = default;
  virtual AmbiguityReport score_entities(std::string_view question, std::span<const EntityCandidate> candidates,
                                         double threshold) = 0;
  virtual AmbiguityReport score_predicates(std::string_view question, std::span<const PredicateCandidate> candidates,
                                           const KnowledgeGraph& graph, double threshold) = 0;
};

/// The perplexity-based scorer.
class BayesianScorer final : public AmbiguityScorer {
 public:
  explicit BayesianScorer(llm::PerplexityProvider& ppl) : ppl_(ppl) {}
  AmbiguityReport score_entities(std::string_view question, std::span<const EntityCandidate> candidates,
                                 double threshold) override;
  AmbiguityReport score_predicates(std::string_view question, std::span<const PredicateCandidate> candidates,
                                   const KnowledgeGraph& graph, double threshold) override;

 private:
  llm::PerplexityProvider& ppl_;
};

/// Fixes the score of every multi-candidate report, with a posterior whose
/// normalized entropy equals the pinned value. For threshold studies.
class PinnedScorer final : public AmbiguityScorer {
 public:
  PinnedScorer(double entity_score, double intent_score);
  AmbiguityReport score_entities(std::string_view question, std::span<const EntityCandidate> candidates,
                                 double threshold) override;
  AmbiguityReport score_predicates(std::string_view question, std::span<const PredicateCandidate> candidates,
                                   const KnowledgeGraph& graph, double threshold) override;

  /// Distribution over n outcomes with normalized entropy `score`.
  static std::vector<double> posterior_with_score(std::size_t n, double score);

 private:
  double entity_score_;
  double intent_score_;
};

struct Decorated {
  ToolResult result;
  std::vector<AmbiguityReport> reports;
  std::optional<std::string> error;  // scorer failure; the result is then unchanged
};

/// Scores candidate lists of size >= 2 and appends hints that fire.
Decorated decorate_observation(ToolResult result, std::string_view question, const Thresholds& thresholds,
                               AmbiguityScorer& scorer, const KnowledgeGraph& graph);

}  // namespace kgqa
