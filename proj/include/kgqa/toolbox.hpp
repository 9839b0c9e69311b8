// SPDX-License-Identifier: Apache-2.0
//
// The four agent-facing tools. Every tool returns text for the agent plus,
// where relevant, the structured candidates the ambiguity plugin scores.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgqa/graph.hpp"

namespace kgqa {

struct EntityCandidate {
  EntityRecord record;
  double match_score = 0.0;
};

struct PredicateCandidate {
  /// Plain predicate id, or "p1 / p2" for a two-step path through a CVT node.
  std::string predicate;
  Value sample_tail;
  double semantic_score = 0.0;
  EntityId anchor;
  /// True when the anchor is the object of the edge rather than its subject.
  bool inverse = false;
};

struct ToolResult {
  std::string observation_text;
  std::optional<std::vector<EntityCandidate>> entity_candidates;
  std::optional<std::vector<PredicateCandidate>> predicate_candidates;
  bool suspended = false;
};

enum class Tool { search_nodes, search_graph_pattern, execute_sparql, ask_for_clarification };

/// Wire name as the agent writes it, e.g. "SearchNodes".
std::string_view tool_name(Tool tool);
std::optional<Tool> tool_from_name(std::string_view name);
std::size_t tool_arity(Tool tool);

/// Ranks a predicate against the agent's free-text relation description.
/// Implementations must tolerate concurrent calls.
class SemanticScorer {
 public:
  virtual ~SemanticScorer() = default;
  /// Returns a relevance in [0,1].
  virtual double score(std::string_view semantic, std::string_view predicate) const = 0;
};

/// Token-overlap Jaccard between the description and the predicate's final
/// dotted segment(s), split on '.' and '_'.
class LexicalScorer final : public SemanticScorer {
 public:
  double score(std::string_view semantic, std::string_view predicate) const override;
};

/// Human label of a predicate: final dotted segment, underscores as spaces.
/// Composite paths label each step and join them with " / ".
std::string predicate_label(std::string_view predicate);

/// Display form of a node value: the entity's name when it has one.
std::string describe_value(const Value& v, const KnowledgeGraph& graph);

ToolResult search_nodes(const KnowledgeGraph& graph, std::string_view name, std::size_t k);

ToolResult search_graph_pattern(const KnowledgeGraph& graph, std::string_view sparql,
                                std::string_view semantic, std::size_t k,
                                const SemanticScorer& scorer = LexicalScorer{});

/// Never throws: parse and execution failures come back as "Error: ..." text.
ToolResult execute_sparql_tool(const KnowledgeGraph& graph, std::string_view sparql);

/// Throws InvalidArgument for empty text.
ToolResult ask_for_clarification(std::string_view text);

}  // namespace kgqa
