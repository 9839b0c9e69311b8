// SPDX-License-Identifier: Apache-2.0
#include "kgqa/mock.hpp"

#include <regex>
#include <set>

#include "kgqa/dialogue.hpp"
#include "kgqa/errors.hpp"
#include "kgqa/sparql.hpp"
#include "kgqa/text.hpp"
#include "kgqa/toolbox.hpp"

namespace kgqa::mock {

namespace {

using dialogue::Action;
using dialogue::ActionKind;

constexpr std::string_view kHintMarker = "[Ambiguity hint]";

llm::Completion reply(std::string text, const std::string& id) {
  llm::Completion c;
  c.text = std::move(text);
  c.usage.completion_tokens = (c.text.size() + 3) / 4;
  c.backend_id = id;
  return c;
}

Action tool_action(Tool tool, std::vector<std::string> args, std::string thought) {
  Action a;
  a.kind = ActionKind::tool_call;
  a.tool = tool;
  a.args = std::move(args);
  a.thought = std::move(thought);
  return a;
}

std::string strip_prefix(std::string_view s, std::string_view prefix) {
  if (s.starts_with(prefix)) s.remove_prefix(prefix.size());
  return std::string(s);
}

std::vector<std::string> lines_of(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    out.emplace_back(s.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

std::string field(const std::string& line, std::string_view name, std::string_view end) {
  auto pos = line.find(name);
  if (pos == std::string::npos) return "";
  pos += name.size();
  auto stop = end.empty() ? std::string::npos : line.find(end, pos);
  return line.substr(pos, stop == std::string::npos ? std::string::npos : stop - pos);
}

std::string join_or(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += i + 1 == items.size() ? " or " : ", ";
    out += items[i];
  }
  return out;
}

// Builds a clarification request from an observation carrying a hint.
std::string clarification_request(const std::string& observation) {
  auto marker = observation.find(kHintMarker);
  bool entity_hint = observation.find("entity ambiguity", marker) != std::string::npos;
  std::vector<std::string> options;
  std::string first_name;
  for (const auto& line : lines_of(std::string_view(observation).substr(0, marker))) {
    if (entity_hint && line.starts_with("\"")) {
      auto name = line.substr(1, line.find('"', 1) - 1);
      auto desc = text::trim(field(line, "| description: ", " | types:"));
      while (!desc.empty() && desc.back() == '.') desc.pop_back();
      auto id = text::trim(field(line, "| id: ", ""));
      if (first_name.empty()) first_name = name;
      options.push_back("\"" + name + "\" [" + id + "]" + (desc.empty() ? "" : " (" + desc + ")"));
    } else if (!entity_hint && line.find(" -> ") != std::string::npos) {
      auto pred = line.substr(0, line.find(" -> "));
      options.push_back("\"" + predicate_label(pred) + "\" [" + pred + "]");
    }
  }
  if (entity_hint) return "Which \"" + first_name + "\" do you mean: " + join_or(options) + "?";
  return "Which relation do you mean: " + join_or(options) + "?";
}

bool same_call(const Action& a, const Action& b) {
  return a.kind == b.kind && a.tool == b.tool && a.args == b.args && a.final_sparql == b.final_sparql;
}

std::string anchor_query(const KnowledgeGraph& graph, const EntityId& e) {
  bool has_outgoing = !graph.neighbors(e, Direction::outgoing).empty();
  return has_outgoing ? "SELECT DISTINCT ?e WHERE { ?e ?p ?o FILTER(?e = ns:" + e.id + ") }"
                      : "SELECT DISTINCT ?e WHERE { ?s ?p ?e FILTER(?e = ns:" + e.id + ") }";
}

const std::string* user_text(const llm::ChatPrompt& prompt) {
  for (auto it = prompt.turns.rbegin(); it != prompt.turns.rend(); ++it) {
    if (it->role == llm::Role::user) return &it->text;
  }
  return nullptr;
}

bool occurs_as_token(const std::string& haystack, const std::string& token) {
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; };
  for (auto pos = haystack.find(token); pos != std::string::npos; pos = haystack.find(token, pos + 1)) {
    bool left = pos == 0 || !is_word(haystack[pos - 1]);
    auto end = pos + token.size();
    bool right = end == haystack.size() || !is_word(haystack[end]) ||
                 (haystack[end] == '.' && (end + 1 == haystack.size() || !is_word(haystack[end + 1])));
    if (left && right) return true;
  }
  return false;
}

}  // namespace

llm::Completion AgentBackend::complete(const llm::ChatPrompt& prompt) {
  if (prompt.turns.empty()) return reply("I have no question to answer.", id_);
  auto question = strip_prefix(prompt.turns.front().text, "Question: ");
  auto it = gold_.find(question);
  if (it == gold_.end()) return reply("I do not know how to answer this question.", id_);
  const auto& gold = it->second;
  auto query = sparql::parse(gold);

  // The plan: one lookup per named gold entity, one relation search around
  // the first of them, then the answer.
  std::vector<EntityId> entities;
  std::set<std::string> seen;
  auto note_entity = [&](const sparql::PatternTerm& t) {
    const auto* v = std::get_if<Value>(&t);
    const auto* e = v ? std::get_if<EntityId>(v) : nullptr;
    const auto* rec = e ? graph_.entity(e->id) : nullptr;
    if (rec && !rec->is_cvt && !rec->canonical_name.empty() && rec->canonical_name != rec->id.id &&
        seen.insert(e->id).second) {
      entities.push_back(*e);
    }
  };
  for (const auto& p : query.patterns) {
    note_entity(p.subject);
    note_entity(p.object);
  }
  std::vector<Action> plan;
  for (const auto& e : entities) {
    const auto& name = graph_.entity(e.id)->canonical_name;
    plan.push_back(tool_action(Tool::search_nodes, {name}, "I need to identify the entity named \"" + name + "\"."));
  }
  if (!entities.empty()) {
    const auto& anchor = entities.front();
    std::optional<std::string> relation;
    for (const auto& p : query.patterns) {
      const auto* pv = std::get_if<Value>(&p.predicate);
      if (!pv) continue;
      bool touches = p.subject == sparql::PatternTerm{Value{anchor}} || p.object == sparql::PatternTerm{Value{anchor}};
      if (touches || !relation) relation = value_string(*pv);
      if (touches) break;
    }
    if (relation) {
      plan.push_back(tool_action(Tool::search_graph_pattern, {anchor_query(graph_, anchor), predicate_label(*relation)},
                                 "Let me look at the relations of " + graph_.entity(anchor.id)->canonical_name + "."));
    }
  }
  Action done;
  done.kind = ActionKind::done;
  done.final_sparql = gold;
  done.thought = "I have what I need to answer.";
  plan.push_back(done);

  // Replay the history against the plan.
  std::size_t next = 0;
  std::optional<std::string> pending_hint;
  for (std::size_t i = 1; i < prompt.turns.size(); ++i) {
    if (prompt.turns[i].role != llm::Role::agent) continue;
    auto a = dialogue::parse_action(prompt.turns[i].text);
    std::string observation;
    if (i + 1 < prompt.turns.size() && prompt.turns[i + 1].role == llm::Role::tool) {
      observation = strip_prefix(prompt.turns[i + 1].text, "Observation: ");
    }
    if (a.kind == ActionKind::tool_call && a.tool == Tool::ask_for_clarification) {
      pending_hint.reset();
      continue;
    }
    if (next < plan.size() && same_call(a, plan[next])) {
      ++next;
      pending_hint.reset();
      if (observation.find(kHintMarker) != std::string::npos) pending_hint = observation;
    }
  }
  if (pending_hint) {
    return reply(dialogue::format_action(tool_action(Tool::ask_for_clarification,
                                                     {clarification_request(*pending_hint)},
                                                     "The observation is ambiguous; I should ask the user.")),
                 id_);
  }
  return reply(dialogue::format_action(plan[std::min(next, plan.size() - 1)]), id_);
}

llm::Completion UserBackend::complete(const llm::ChatPrompt& prompt) {
  const auto* msg = user_text(prompt);
  if (!msg) throw ProviderError("user simulator prompt has no user turn");
  constexpr std::string_view kGold = "Golden SPARQL:\n";
  constexpr std::string_view kRequest = "\n\nClarification request:\n";
  auto g = msg->find(kGold);
  auto r = msg->find(kRequest);
  if (g == std::string::npos || r == std::string::npos) throw ProviderError("unexpected user simulator prompt");
  auto gold = msg->substr(g + kGold.size(), r - g - kGold.size());
  auto request = msg->substr(r + kRequest.size());

  static const std::regex kId(R"([A-Za-z0-9_]+(?:\.[A-Za-z0-9_]+)+)");
  for (auto it = std::sregex_iterator(request.begin(), request.end(), kId); it != std::sregex_iterator(); ++it) {
    auto token = it->str();
    if (!occurs_as_token(gold, token)) continue;
    if (looks_like_entity_id(token)) {
      const auto* rec = graph_ ? graph_->entity(token) : nullptr;
      auto name = rec && !rec->canonical_name.empty() ? rec->canonical_name : token;
      return reply(name + " (" + token + ")", id_);
    }
    return reply("The \"" + predicate_label(token) + "\" relation (" + token + ")", id_);
  }
  return reply("I am not sure; either is fine.", id_);
}

llm::Completion GeneratorBackend::complete(const llm::ChatPrompt& prompt) {
  const auto* msg = user_text(prompt);
  if (!msg) throw ProviderError("question generation prompt has no user turn");
  std::vector<std::string> responses;
  for (const auto& line : lines_of(*msg)) {
    if (!line.starts_with("Response: ")) continue;
    auto r = text::trim(std::string_view(line).substr(10));
    while (!r.empty() && (r.back() == '.' || r.back() == '?')) r.pop_back();
    responses.push_back(r);
  }
  std::string text = "Clarified question about ";
  for (std::size_t i = 0; i < responses.size(); ++i) text += (i ? "; " : "") + responses[i];
  return reply(text + ".", id_);
}

}  // namespace kgqa::mock
