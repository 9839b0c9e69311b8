// SPDX-License-Identifier: Apache-2.0
#include "kgqa/ambiguity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "kgqa/errors.hpp"

namespace kgqa {

void Thresholds::validate() const {
  auto ok = [](double t) { return t >= 0.0 && t <= 1.0; };
  if (!ok(entity) || !ok(intent)) {
    throw InvalidArgument("thresholds must lie in [0,1], got entity=" + std::to_string(entity) +
                          " intent=" + std::to_string(intent));
  }
}

std::string_view to_string(AmbiguityKind kind) { return kind == AmbiguityKind::entity ? "entity" : "intent"; }

double normalized_entropy(std::span<const double> p) {
  if (p.empty()) throw InvalidDistribution("empty distribution");
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw InvalidDistribution("probabilities must be finite and non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
  if (p.size() == 1) return 0.0;
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

namespace {

std::vector<double> softmax(std::span<const double> xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  std::vector<double> out(xs.size());
  double z = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = std::exp(xs[i] - m);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

std::string shortest(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string tail_text(const KnowledgeGraph& graph, const Value& v) {
  if (const auto* e = std::get_if<EntityId>(&v)) {
    if (const auto* rec = graph.entity(e->id); rec && !rec->canonical_name.empty()) return rec->canonical_name;
  }
  return value_string(v);
}

}  // namespace

std::vector<double> bayesian_posterior(std::span<const double> weights, std::span<const double> ppl) {
  if (weights.empty() || weights.size() != ppl.size()) {
    throw InvalidArgument("prior weights and perplexities must be non-empty and of equal length");
  }
  const std::size_t n = weights.size();
  double total = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw InvalidArgument("prior weights must be non-negative");
    total += w;
  }
  std::vector<double> prior(n, 1.0 / static_cast<double>(n));
  if (total > 0.0) {
    for (std::size_t i = 0; i < n; ++i) prior[i] = weights[i] / total;
  }
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ppl[i] > 0.0)) throw InvalidArgument("perplexities must be positive");
    raw[i] = 1.0 / ppl[i];
  }
  auto likelihood = softmax(raw);
  std::vector<double> joint(n);
  for (std::size_t i = 0; i < n; ++i) joint[i] = likelihood[i] * prior[i];
  return softmax(joint);
}

std::string entity_context(const EntityRecord& record) {
  return "Description: " + (record.description.empty() ? std::string("(none)") : record.description) +
         "\nQuestion: ";
}

std::string verbalize(const KnowledgeGraph& graph, const PredicateCandidate& c) {
  std::string anchor = tail_text(graph, c.anchor);
  std::string tail = tail_text(graph, c.sample_tail);
  auto label = predicate_label(c.predicate);
  // For an incoming edge the anchor is the object.
  return c.inverse ? tail + " " + label + " " + anchor + "." : anchor + " " + label + " " + tail + ".";
}

std::size_t predicate_weight(const KnowledgeGraph& graph, std::string_view predicate) {
  auto sep = predicate.rfind(" / ");
  if (sep != std::string_view::npos) predicate.remove_prefix(sep + 3);
  return graph.predicate_frequency(predicate);
}

std::string hint_text(AmbiguityKind kind, double score, double threshold, const std::vector<std::string>& labels) {
  char score_buf[32];
  std::snprintf(score_buf, sizeof score_buf, "%.3f", score);
  std::string out = "\n[Ambiguity hint] " + std::string(to_string(kind)) + " ambiguity score " + score_buf +
                    " >= threshold " + shortest(threshold) + ". Candidates: ";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += "; ";
    out += labels[i];
  }
  return out + ". Consider calling AskForClarification.";
}

namespace {

AmbiguityReport finish_report(AmbiguityKind kind, std::vector<std::string> labels, std::vector<double> posterior,
                              double score, double threshold) {
  AmbiguityReport r;
  r.kind = kind;
  r.score = score;
  r.threshold = threshold;
  r.needs_clarification = score >= threshold;
  if (r.needs_clarification) r.hint_text = hint_text(kind, score, threshold, labels);
  for (std::size_t i = 0; i < labels.size(); ++i) r.posterior.emplace_back(std::move(labels[i]), posterior[i]);
  return r;
}

}  // namespace

AmbiguityReport make_report(AmbiguityKind kind, std::vector<std::string> labels, std::vector<double> posterior,
                            double threshold) {
  double score = normalized_entropy(posterior);
  return finish_report(kind, std::move(labels), std::move(posterior), score, threshold);
}

AmbiguityReport entity_ambiguity(std::string_view question, std::span<const EntityCandidate> candidates,
                                 llm::PerplexityProvider& ppl, double threshold) {
  if (candidates.empty()) throw InvalidArgument("entity ambiguity needs at least one candidate");
  std::vector<double> weights, perplexities;
  std::vector<std::string> labels;
  for (const auto& c : candidates) {
    weights.push_back(static_cast<double>(c.record.popularity));
    perplexities.push_back(llm::perplexity(entity_context(c.record), question, ppl));
    labels.push_back(c.record.canonical_name);
  }
  return make_report(AmbiguityKind::entity, std::move(labels), bayesian_posterior(weights, perplexities), threshold);
}

AmbiguityReport intent_ambiguity(std::string_view question, std::span<const PredicateCandidate> candidates,
                                 llm::PerplexityProvider& ppl, const KnowledgeGraph& graph, double threshold) {
  if (candidates.empty()) throw InvalidArgument("intent ambiguity needs at least one candidate");
  std::vector<double> weights, perplexities;
  std::vector<std::string> labels;
  for (const auto& c : candidates) {
    weights.push_back(static_cast<double>(predicate_weight(graph, c.predicate)));
    perplexities.push_back(llm::perplexity(verbalize(graph, c), question, ppl));
    labels.push_back(c.predicate);
  }
  return make_report(AmbiguityKind::intent, std::move(labels), bayesian_posterior(weights, perplexities), threshold);
}

AmbiguityReport BayesianScorer::score_entities(std::string_view question, std::span<const EntityCandidate> candidates,
                                               double threshold) {
  return entity_ambiguity(question, candidates, ppl_, threshold);
}

AmbiguityReport BayesianScorer::score_predicates(std::string_view question,
                                                 std::span<const PredicateCandidate> candidates,
                                                 const KnowledgeGraph& graph, double threshold) {
  return intent_ambiguity(question, candidates, ppl_, graph, threshold);
}

PinnedScorer::PinnedScorer(double entity_score, double intent_score)
    : entity_score_(entity_score), intent_score_(intent_score) {
  if (entity_score < 0.0 || entity_score > 1.0 || intent_score < 0.0 || intent_score > 1.0) {
    throw InvalidArgument("pinned scores must lie in [0,1]");
  }
}

std::vector<double> PinnedScorer::posterior_with_score(std::size_t n, double score) {
  if (n == 0) throw InvalidArgument("need at least one outcome");
  if (n == 1) return {1.0};
  // One heavy outcome a, the rest share 1 - a evenly. The normalized entropy
  // falls monotonically from 1 at a = 1/n to 0 at a = 1.
  auto shape = [n](double a) {
    std::vector<double> p(n, (1.0 - a) / static_cast<double>(n - 1));
    p[0] = a;
    return p;
  };
  double lo = 1.0 / static_cast<double>(n), hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    auto p = shape(mid);
    double h = 0.0;
    for (double x : p) {
      if (x > 0.0) h -= x * std::log(x);
    }
    (h / std::log(static_cast<double>(n)) > score ? lo : hi) = mid;
  }
  return shape(0.5 * (lo + hi));
}

AmbiguityReport PinnedScorer::score_entities(std::string_view, std::span<const EntityCandidate> candidates,
                                             double threshold) {
  if (candidates.empty()) throw InvalidArgument("entity ambiguity needs at least one candidate");
  std::vector<std::string> labels;
  for (const auto& c : candidates) labels.push_back(c.record.canonical_name);
  double score = candidates.size() == 1 ? 0.0 : entity_score_;
  return finish_report(AmbiguityKind::entity, std::move(labels), posterior_with_score(candidates.size(), score),
                       score, threshold);
}

AmbiguityReport PinnedScorer::score_predicates(std::string_view, std::span<const PredicateCandidate> candidates,
                                               const KnowledgeGraph&, double threshold) {
  if (candidates.empty()) throw InvalidArgument("intent ambiguity needs at least one candidate");
  std::vector<std::string> labels;
  for (const auto& c : candidates) labels.push_back(c.predicate);
  double score = candidates.size() == 1 ? 0.0 : intent_score_;
  return finish_report(AmbiguityKind::intent, std::move(labels), posterior_with_score(candidates.size(), score),
                       score, threshold);
}

Decorated decorate_observation(ToolResult result, std::string_view question, const Thresholds& thresholds,
                               AmbiguityScorer& scorer, const KnowledgeGraph& graph) {
  Decorated out;
  try {
    if (result.entity_candidates && result.entity_candidates->size() >= 2) {
      out.reports.push_back(scorer.score_entities(question, *result.entity_candidates, thresholds.entity));
    }
    if (result.predicate_candidates && result.predicate_candidates->size() >= 2) {
      out.reports.push_back(scorer.score_predicates(question, *result.predicate_candidates, graph, thresholds.intent));
    }
  } catch (const ProviderError& e) {
    out.reports.clear();
    out.error = e.what();
    out.result = std::move(result);
    return out;
  }
  for (const auto& r : out.reports) {
    if (r.needs_clarification) result.observation_text += r.hint_text;
  }
  out.result = std::move(result);
  return out;
}

}  // namespace kgqa
