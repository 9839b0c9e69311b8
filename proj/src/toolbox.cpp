// SPDX-License-Identifier: Apache-2.0
#include "kgqa/toolbox.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "kgqa/errors.hpp"
#include "kgqa/sparql.hpp"
#include "kgqa/text.hpp"

namespace kgqa {

namespace {

constexpr std::size_t kDescriptionChars = 200;
constexpr std::size_t kMaxRows = 50;
constexpr std::string_view kPathSeparator = " / ";

struct ToolInfo {
  Tool tool;
  std::string_view name;
  std::size_t arity;
};

constexpr std::array<ToolInfo, 4> kTools = {{
    {Tool::search_nodes, "SearchNodes", 1},
    {Tool::search_graph_pattern, "SearchGraphPattern", 2},
    {Tool::execute_sparql, "ExecuteSPARQL", 1},
    {Tool::ask_for_clarification, "AskForClarification", 1},
}};

std::vector<std::string> path_steps(std::string_view predicate) {
  std::vector<std::string> steps;
  std::size_t start = 0;
  while (true) {
    auto pos = predicate.find(kPathSeparator, start);
    steps.emplace_back(predicate.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + kPathSeparator.size();
  }
  return steps;
}

std::string_view final_segment(std::string_view predicate) {
  auto dot = predicate.rfind('.');
  return dot == std::string_view::npos ? predicate : predicate.substr(dot + 1);
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

// One gathered (predicate, tail) observation before deduplication.
struct Gathered {
  std::string tail_key;
  Value tail;
  EntityId anchor;
  bool inverse = false;
};

}  // namespace

std::string_view tool_name(Tool tool) {
  for (const auto& t : kTools) {
    if (t.tool == tool) return t.name;
  }
  return "?";
}

std::optional<Tool> tool_from_name(std::string_view name) {
  for (const auto& t : kTools) {
    if (t.name == name) return t.tool;
  }
  return std::nullopt;
}

std::size_t tool_arity(Tool tool) {
  for (const auto& t : kTools) {
    if (t.tool == tool) return t.arity;
  }
  return 0;
}

double LexicalScorer::score(std::string_view semantic, std::string_view predicate) const {
  std::vector<std::string> pred_tokens;
  for (const auto& step : path_steps(predicate)) {
    for (auto& w : words(final_segment(step))) pred_tokens.push_back(std::move(w));
  }
  return text::jaccard(words(semantic), std::move(pred_tokens));
}

std::string predicate_label(std::string_view predicate) {
  std::vector<std::string> labels;
  for (const auto& step : path_steps(predicate)) {
    std::string label(final_segment(step));
    std::replace(label.begin(), label.end(), '_', ' ');
    labels.push_back(std::move(label));
  }
  return join(labels, kPathSeparator);
}

std::string describe_value(const Value& v, const KnowledgeGraph& graph) {
  const auto& s = value_string(v);
  if (const auto* e = std::get_if<EntityId>(&v)) {
    if (const auto* rec = graph.entity(e->id); rec && !rec->canonical_name.empty() && rec->canonical_name != s) {
      return s + " (" + rec->canonical_name + ")";
    }
  }
  return s;
}

ToolResult search_nodes(const KnowledgeGraph& graph, std::string_view name, std::size_t k) {
  if (text::trim(name).empty()) throw InvalidArgument("SearchNodes needs a non-empty name");
  if (k == 0) throw InvalidArgument("SearchNodes needs k > 0");
  ToolResult result;
  std::vector<EntityCandidate> candidates;
  std::ostringstream out;
  for (const auto& m : graph.find_entities(name, k)) {
    const auto& rec = *m.record;
    if (!candidates.empty()) out << "\n";
    out << '"' << rec.canonical_name << "\" | description: " << text::truncate_utf8(rec.description, kDescriptionChars)
        << " | types: " << join(rec.types, ", ") << " | id: " << rec.id.id;
    candidates.push_back({rec, m.score});
  }
  result.observation_text = candidates.empty() ? "No nodes found." : out.str();
  result.entity_candidates = std::move(candidates);
  return result;
}

ToolResult search_graph_pattern(const KnowledgeGraph& graph, std::string_view sparql_text,
                                std::string_view semantic, std::size_t k, const SemanticScorer& scorer) {
  if (k == 0) throw InvalidArgument("SearchGraphPattern needs k > 0");
  ToolResult result;
  sparql::ResultTable anchors_table;
  try {
    anchors_table = sparql::execute(sparql::parse(sparql_text), graph);
  } catch (const Error& e) {
    result.observation_text = std::string("Error: ") + e.what();
    return result;
  }

  std::vector<EntityId> anchors;
  std::set<std::string> seen_anchor;
  for (const auto& row : anchors_table.rows) {
    if (row.empty()) continue;
    const auto* id = std::get_if<EntityId>(&row[0]);
    if (id && graph.entity(id->id) && seen_anchor.insert(id->id).second) anchors.push_back(*id);
  }
  if (anchors.empty()) {
    result.observation_text = "No matching anchor entities.";
    return result;
  }

  std::map<std::string, std::vector<Gathered>> outgoing;
  std::map<std::string, std::vector<Gathered>> incoming;
  for (const auto& anchor : anchors) {
    for (const auto& edge : graph.neighbors(anchor, Direction::both)) {
      if (edge.incoming) {
        incoming[edge.predicate].push_back({value_string(edge.neighbor), edge.neighbor, anchor, true});
        continue;
      }
      const auto* mid = std::get_if<EntityId>(&edge.neighbor);
      const auto* rec = mid ? graph.entity(mid->id) : nullptr;
      bool expanded = false;
      if (rec && rec->is_cvt) {
        for (const auto& hop : graph.neighbors(*mid, Direction::outgoing)) {
          if (hop.neighbor == Value{anchor}) continue;
          auto key = edge.predicate + std::string(kPathSeparator) + hop.predicate;
          outgoing[key].push_back({value_string(hop.neighbor), hop.neighbor, anchor, false});
          expanded = true;
        }
      }
      if (!expanded) outgoing[edge.predicate].push_back({value_string(edge.neighbor), edge.neighbor, anchor, false});
    }
  }
  for (auto& [pred, items] : incoming) {
    if (!outgoing.contains(pred)) outgoing.emplace(pred, std::move(items));
  }

  std::vector<PredicateCandidate> candidates;
  for (const auto& [pred, items] : outgoing) {
    const auto& best = *std::min_element(items.begin(), items.end(), [](const Gathered& a, const Gathered& b) {
      return std::tie(a.tail_key, a.anchor.id) < std::tie(b.tail_key, b.anchor.id);
    });
    double s = std::clamp(scorer.score(semantic, pred), 0.0, 1.0);
    candidates.push_back({pred, best.tail, s, best.anchor, best.inverse});
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const PredicateCandidate& a, const PredicateCandidate& b) {
    if (a.semantic_score != b.semantic_score) return a.semantic_score > b.semantic_score;
    return a.predicate < b.predicate;
  });
  if (candidates.size() > k) candidates.resize(k);

  if (candidates.empty()) {
    result.observation_text = "No predicates found.";
  } else {
    std::ostringstream out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& c = candidates[i];
      if (i) out << "\n";
      out << c.predicate << " -> " << describe_value(c.sample_tail, graph);
      if (c.inverse) out << " [incoming]";
    }
    result.observation_text = out.str();
  }
  result.predicate_candidates = std::move(candidates);
  return result;
}

ToolResult execute_sparql_tool(const KnowledgeGraph& graph, std::string_view sparql_text) {
  ToolResult result;
  try {
    auto table = sparql::execute(sparql::parse(sparql_text), graph);
    result.observation_text = sparql::format_table(table, &graph, kMaxRows);
  } catch (const std::exception& e) {
    result.observation_text = std::string("Error: ") + e.what();
  }
  return result;
}

ToolResult ask_for_clarification(std::string_view request) {
  if (text::trim(request).empty()) throw InvalidArgument("AskForClarification needs non-empty text");
  ToolResult result;
  result.observation_text = std::string(request);
  result.suspended = true;
  return result;
}

}  // namespace kgqa
