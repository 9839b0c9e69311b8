// SPDX-License-Identifier: Apache-2.0
#include "kgqa/dialogue.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa::dialogue {

// ---------------------------------------------------------------------------
// Action grammar

namespace {

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    auto line = s.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

std::string_view ltrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

bool is_blank(std::string_view s) { return ltrim(s).empty(); }

// Parses `Name("a", "b")` followed only by whitespace.
bool parse_call(std::string_view s, std::string& name, std::vector<std::string>& args) {
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  };
  skip_ws();
  std::size_t name_start = i;
  while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  name = std::string(s.substr(name_start, i - name_start));
  if (name.empty()) return false;
  skip_ws();
  if (i >= s.size() || s[i] != '(') return false;
  ++i;
  skip_ws();
  if (i < s.size() && s[i] == ')') {
    ++i;
  } else {
    while (true) {
      skip_ws();
      if (i >= s.size() || s[i] != '"') return false;
      ++i;
      std::string arg;
      bool closed = false;
      while (i < s.size()) {
        char c = s[i++];
        if (c == '\\') {
          if (i >= s.size()) return false;
          char e = s[i++];
          switch (e) {
            case 'n': arg.push_back('\n'); break;
            case 't': arg.push_back('\t'); break;
            case 'r': arg.push_back('\r'); break;
            default: arg.push_back(e); break;
          }
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          arg.push_back(c);
        }
      }
      if (!closed) return false;
      args.push_back(std::move(arg));
      skip_ws();
      if (i < s.size() && s[i] == ',') {
        ++i;
        continue;
      }
      if (i < s.size() && s[i] == ')') {
        ++i;
        break;
      }
      return false;
    }
  }
  skip_ws();
  return i == s.size();
}

std::string join_lines(const std::vector<std::string_view>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

}  // namespace

Action parse_action(std::string_view completion_text) {
  Action malformed;
  malformed.kind = ActionKind::malformed;
  malformed.raw = std::string(completion_text);

  auto lines = split_lines(completion_text);
  // Models sometimes continue with an invented observation; cut it off.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (ltrim(lines[i]).starts_with("Observation:")) {
      lines.resize(i);
      break;
    }
  }
  std::size_t i = 0;
  while (i < lines.size() && is_blank(lines[i])) ++i;
  if (i == lines.size()) return malformed;

  std::optional<std::string> thought;
  if (ltrim(lines[i]).starts_with("Thought:")) {
    std::size_t start = i;
    std::size_t j = i + 1;
    while (j < lines.size() && !ltrim(lines[j]).starts_with("Action:") && !ltrim(lines[j]).starts_with("Done:")) ++j;
    auto body = join_lines(lines, start, j);
    body = text::trim(std::string_view(body).substr(body.find("Thought:") + 8));
    thought = body;
    i = j;
    if (i == lines.size()) return malformed;
  }

  auto head = ltrim(lines[i]);
  auto rest = text::trim(join_lines(lines, i, lines.size()));
  Action a;
  a.thought = thought;
  a.raw = std::string(completion_text);
  if (head.starts_with("Done:")) {
    auto sparql = text::trim(std::string_view(rest).substr(5));
    if (sparql.empty()) return malformed;
    a.kind = ActionKind::done;
    a.final_sparql = sparql;
    return a;
  }
  if (head.starts_with("Action:")) {
    std::string name;
    std::vector<std::string> args;
    if (!parse_call(std::string_view(rest).substr(7), name, args)) return malformed;
    auto tool = tool_from_name(name);
    if (!tool || tool_arity(*tool) != args.size()) return malformed;
    a.kind = ActionKind::tool_call;
    a.tool = tool;
    a.args = std::move(args);
    return a;
  }
  return malformed;
}

std::string quote_arg(std::string_view arg) {
  std::string out = "\"";
  for (char c : arg) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

std::string format_action(const Action& a) {
  if (a.kind == ActionKind::malformed) return a.raw;
  std::string out;
  if (a.thought) out = "Thought: " + *a.thought + "\n";
  if (a.kind == ActionKind::done) return out + "Done: " + *a.final_sparql;
  out += "Action: " + std::string(tool_name(*a.tool)) + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += quote_arg(a.args[i]);
  }
  return out + ")";
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::running: return "running";
    case Status::awaiting_clarification: return "awaiting_clarification";
    case Status::finished: return "finished";
    case Status::failed: return "failed";
  }
  return "failed";
}

namespace {

Status status_from_string(std::string_view s) {
  for (Status st : {Status::running, Status::awaiting_clarification, Status::finished, Status::failed}) {
    if (to_string(st) == s) return st;
  }
  throw InvalidArgument("unknown session status: " + std::string(s));
}

}  // namespace

std::string serialize_turn(const Turn& turn) {
  std::string out = format_action(turn.action);
  if (turn.observation) out += "\nObservation: " + *turn.observation;
  if (turn.clarification) out += "\nClarification: " + *turn.clarification;
  return out;
}

std::string serialize_history(const SessionState& session) {
  std::string out;
  for (std::size_t i = 0; i < session.history.size(); ++i) {
    if (i) out += "\n";
    out += serialize_turn(session.history[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prompts

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("prompt file not found: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return text::trim(ss.str());
}

}  // namespace

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet p;
  p.instruction = read_file(dir / "instruction.txt");
  p.user_simulator = read_file(dir / "user_simulator.txt");
  p.question_generation = read_file(dir / "question_generation.txt");
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_directory(dir / "exemplars")) {
    for (const auto& e : std::filesystem::directory_iterator(dir / "exemplars")) {
      if (e.path().extension() == ".txt") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) p.exemplars.push_back(read_file(f));
  return p;
}

llm::ChatPrompt build_agent_prompt(const SessionState& session, const PromptSet& prompts) {
  llm::ChatPrompt prompt;
  prompt.system = prompts.instruction;
  for (std::size_t i = 0; i < prompts.exemplars.size() && i < prompts.max_exemplars; ++i) {
    prompt.exemplars.push_back({llm::Role::example, prompts.exemplars[i]});
  }
  prompt.turns.push_back({llm::Role::user, "Question: " + session.question});
  for (const auto& turn : session.history) {
    prompt.turns.push_back({llm::Role::agent, format_action(turn.action)});
    if (turn.observation) prompt.turns.push_back({llm::Role::tool, "Observation: " + *turn.observation});
    if (turn.clarification) prompt.turns.push_back({llm::Role::user, "Clarification: " + *turn.clarification});
  }
  return prompt;
}

llm::ChatPrompt build_user_prompt(std::string_view golden_sparql, std::string_view request, const PromptSet& prompts) {
  llm::ChatPrompt prompt;
  prompt.system = prompts.user_simulator;
  prompt.turns.push_back({llm::Role::user, "Golden SPARQL:\n" + std::string(golden_sparql) +
                                               "\n\nClarification request:\n" + std::string(request)});
  return prompt;
}

// ---------------------------------------------------------------------------
// Events and JSON

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 8> kEventNames = {{
    {EventKind::thought, "thought"},
    {EventKind::tool_call, "tool_call"},
    {EventKind::observation, "observation"},
    {EventKind::hint, "hint"},
    {EventKind::clarification_request, "clarification_request"},
    {EventKind::clarification_response, "clarification_response"},
    {EventKind::final_answer, "final_answer"},
    {EventKind::error, "error"},
}};

std::string now_iso8601() {
  auto now = std::chrono::system_clock::now();
  auto secs = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

json value_to_json(const Value& v) {
  if (const auto* e = std::get_if<EntityId>(&v)) return {{"type", "entity"}, {"value", e->id}};
  const auto& l = std::get<Literal>(v);
  return {{"type", to_string(l.kind)}, {"value", l.value}};
}

Value value_from_json(const json& j) {
  auto type = j.at("type").get<std::string>();
  auto value = j.at("value").get<std::string>();
  if (type == "entity") return EntityId{value};
  for (auto k : {LiteralKind::text, LiteralKind::integer, LiteralKind::floating, LiteralKind::datetime}) {
    if (to_string(k) == type) return Literal{value, k};
  }
  throw InvalidArgument("unknown value type: " + type);
}

json action_to_json(const Action& a) {
  json j = {{"kind", a.kind == ActionKind::tool_call ? "tool_call" : a.kind == ActionKind::done ? "done" : "malformed"}};
  if (a.thought) j["thought"] = *a.thought;
  if (a.tool) j["tool"] = tool_name(*a.tool);
  if (a.kind == ActionKind::tool_call) j["args"] = a.args;
  if (a.final_sparql) j["final_sparql"] = *a.final_sparql;
  if (a.kind == ActionKind::malformed) j["raw"] = a.raw;
  return j;
}

Action action_from_json(const json& j) {
  Action a;
  auto kind = j.at("kind").get<std::string>();
  a.kind = kind == "tool_call" ? ActionKind::tool_call : kind == "done" ? ActionKind::done : ActionKind::malformed;
  if (j.contains("thought")) a.thought = j["thought"].get<std::string>();
  if (j.contains("tool")) a.tool = tool_from_name(j["tool"].get<std::string>());
  if (j.contains("args")) a.args = j["args"].get<std::vector<std::string>>();
  if (j.contains("final_sparql")) a.final_sparql = j["final_sparql"].get<std::string>();
  a.raw = a.kind == ActionKind::malformed ? j.value("raw", "") : format_action(a);
  return a;
}

json report_to_json(const AmbiguityReport& r) {
  json posterior = json::array();
  for (const auto& [label, p] : r.posterior) posterior.push_back({{"label", label}, {"p", p}});
  return {{"kind", to_string(r.kind)},
          {"score", r.score},
          {"threshold", r.threshold},
          {"needs_clarification", r.needs_clarification},
          {"posterior", posterior}};
}

AmbiguityReport report_from_json(const json& j) {
  AmbiguityReport r;
  r.kind = j.at("kind") == "entity" ? AmbiguityKind::entity : AmbiguityKind::intent;
  r.score = j.at("score");
  r.threshold = j.at("threshold");
  r.needs_clarification = j.at("needs_clarification");
  std::vector<std::string> labels;
  for (const auto& p : j.at("posterior")) {
    r.posterior.emplace_back(p.at("label"), p.at("p"));
    labels.push_back(p.at("label"));
  }
  if (r.needs_clarification) r.hint_text = hint_text(r.kind, r.score, r.threshold, labels);
  return r;
}

std::optional<AmbiguityKind> hint_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key] == "entity" ? AmbiguityKind::entity : AmbiguityKind::intent;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "error";
}

EventKind event_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kEventNames) {
    if (name == s) return k;
  }
  throw InvalidArgument("unknown event kind: " + std::string(s));
}

json event_to_json(const Event& e, bool include_timestamp) {
  json j = {{"seq", e.seq}, {"kind", to_string(e.kind)}, {"payload", e.payload}};
  if (include_timestamp) j["timestamp"] = e.timestamp;
  return j;
}

Event event_from_json(const json& j) {
  Event e;
  e.seq = j.at("seq");
  e.kind = event_kind_from_string(j.at("kind").get<std::string>());
  e.payload = j.at("payload");
  e.timestamp = j.value("timestamp", "");
  return e;
}

json table_to_json(const sparql::ResultTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (const auto& v : r) row.push_back(value_to_json(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", t.columns}, {"rows", rows}};
}

sparql::ResultTable table_from_json(const json& j) {
  sparql::ResultTable t;
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<Value> row;
    for (const auto& v : r) row.push_back(value_from_json(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

json Transcript::to_json(bool include_timestamps) const {
  const auto& s = session;
  json history = json::array();
  for (const auto& t : s.history) {
    json turn = {{"action", action_to_json(t.action)}};
    if (t.observation) turn["observation"] = *t.observation;
    if (t.clarification) turn["clarification"] = *t.clarification;
    if (t.hint) turn["hint"] = to_string(*t.hint);
    history.push_back(std::move(turn));
  }
  json reports = json::array();
  for (const auto& r : s.reports) reports.push_back(report_to_json(r));
  json events_json = json::array();
  for (const auto& e : events) events_json.push_back(event_to_json(e, include_timestamps));
  json j = {{"question", s.question},
            {"status", to_string(s.status)},
            {"turn_budget", s.turn_budget},
            {"clarification_count_entity", s.clarification_count_entity},
            {"clarification_count_intent", s.clarification_count_intent},
            {"history", history},
            {"reports", reports},
            {"plugin_errors", s.plugin_errors},
            {"events", events_json}};
  if (s.final_sparql) j["final_sparql"] = *s.final_sparql;
  if (s.answers) j["answers"] = table_to_json(*s.answers);
  if (!s.failure_reason.empty()) j["failure_reason"] = s.failure_reason;
  if (s.last_hint) j["last_hint"] = to_string(*s.last_hint);
  if (golden_sparql) j["golden_sparql"] = *golden_sparql;
  if (item_id) j["id"] = *item_id;
  return j;
}

Transcript Transcript::from_json(const json& j) {
  Transcript t;
  auto& s = t.session;
  s.question = j.at("question");
  s.status = status_from_string(j.at("status").get<std::string>());
  s.turn_budget = j.value("turn_budget", std::size_t{10});
  s.clarification_count_entity = j.value("clarification_count_entity", 0);
  s.clarification_count_intent = j.value("clarification_count_intent", 0);
  for (const auto& tj : j.at("history")) {
    Turn turn;
    turn.action = action_from_json(tj.at("action"));
    if (tj.contains("observation")) turn.observation = tj["observation"].get<std::string>();
    if (tj.contains("clarification")) turn.clarification = tj["clarification"].get<std::string>();
    turn.hint = hint_from_json(tj, "hint");
    s.history.push_back(std::move(turn));
  }
  if (j.contains("reports")) {
    for (const auto& r : j["reports"]) s.reports.push_back(report_from_json(r));
  }
  if (j.contains("plugin_errors")) s.plugin_errors = j["plugin_errors"].get<std::vector<std::string>>();
  if (j.contains("final_sparql")) s.final_sparql = j["final_sparql"].get<std::string>();
  if (j.contains("answers")) s.answers = table_from_json(j["answers"]);
  s.failure_reason = j.value("failure_reason", "");
  s.last_hint = hint_from_json(j, "last_hint");
  if (j.contains("golden_sparql")) t.golden_sparql = j["golden_sparql"].get<std::string>();
  if (j.contains("id")) t.item_id = j["id"].get<std::string>();
  if (j.contains("events")) {
    for (const auto& e : j["events"]) t.events.push_back(event_from_json(e));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

void emit(const EventSink& sink, EventKind kind, json payload) {
  if (sink) sink(kind, std::move(payload));
}

void fail(SessionState& s, std::string reason, const EventSink& sink) {
  s.status = Status::failed;
  s.failure_reason = std::move(reason);
  emit(sink, EventKind::error, {{"reason", s.failure_reason}});
}

bool budget_exhausted(const SessionState& s) { return s.history.size() >= s.turn_budget; }

ToolResult dispatch(const Action& a, const std::string& question, ToolContext& tools) {
  (void)question;
  switch (*a.tool) {
    case Tool::search_nodes: return search_nodes(tools.graph, a.args.at(0), tools.k);
    case Tool::search_graph_pattern: return search_graph_pattern(tools.graph, a.args.at(0), a.args.at(1), tools.k);
    case Tool::execute_sparql: return execute_sparql_tool(tools.graph, a.args.at(0));
    case Tool::ask_for_clarification: return ask_for_clarification(a.args.at(0));
  }
  throw InvalidArgument("unknown tool");
}

}  // namespace

Action next_action(SessionState& session, const PromptSet& prompts, llm::ChatBackend& backend, const EventSink& sink) {
  if (session.status != Status::running) throw StateError("next_action needs a running session");
  Action action;
  for (std::size_t attempt = 0; attempt < kMaxParseAttempts; ++attempt) {
    if (budget_exhausted(session)) {
      fail(session, "budget", sink);
      return action;
    }
    llm::Completion completion;
    try {
      completion = llm::complete(build_agent_prompt(session, prompts), backend);
    } catch (const Error& e) {
      fail(session, e.what(), sink);
      return action;
    }
    action = parse_action(completion.text);
    if (action.kind != ActionKind::malformed) return action;
    Turn turn;
    turn.action = action;
    turn.observation = std::string(kInvalidActionObservation);
    session.history.push_back(std::move(turn));
    emit(sink, EventKind::observation, {{"text", kInvalidActionObservation}, {"raw", action.raw}});
  }
  fail(session, "action-parse-exhausted", sink);
  return action;
}

void step(SessionState& session, const Action& action, ToolContext& tools, const EventSink& sink) {
  if (session.status != Status::running) throw StateError("step needs a running session");
  if (action.kind == ActionKind::malformed) throw InvalidArgument("cannot step a malformed action");
  if (budget_exhausted(session)) {
    fail(session, "budget", sink);
    return;
  }
  if (action.thought) emit(sink, EventKind::thought, {{"text", *action.thought}});

  Turn turn;
  turn.action = action;

  if (action.kind == ActionKind::done) {
    try {
      auto table = sparql::execute(sparql::parse(*action.final_sparql), tools.graph);
      session.history.push_back(std::move(turn));
      session.final_sparql = *action.final_sparql;
      session.answers = std::move(table);
      session.status = Status::finished;
      emit(sink, EventKind::final_answer,
           {{"sparql", *session.final_sparql},
            {"answers", table_to_json(*session.answers)},
            {"text", sparql::format_table(*session.answers, &tools.graph)}});
    } catch (const Error& e) {
      turn.observation = std::string("Error: ") + e.what();
      emit(sink, EventKind::observation, {{"text", *turn.observation}});
      session.history.push_back(std::move(turn));
    }
    return;
  }

  emit(sink, EventKind::tool_call, {{"tool", tool_name(*action.tool)}, {"args", action.args}});
  if (*action.tool == Tool::ask_for_clarification) {
    try {
      auto request = ask_for_clarification(action.args.at(0));
      session.history.push_back(std::move(turn));
      session.status = Status::awaiting_clarification;
      emit(sink, EventKind::clarification_request, {{"text", request.observation_text}});
    } catch (const InvalidArgument& e) {
      turn.observation = std::string("Error: ") + e.what();
      session.history.push_back(std::move(turn));
      emit(sink, EventKind::observation, {{"text", *session.history.back().observation}});
    }
    return;
  }

  ToolResult result;
  try {
    result = dispatch(action, session.question, tools);
  } catch (const Error& e) {
    result = ToolResult{};
    result.observation_text = std::string("Error: ") + e.what();
  }
  auto decorated = decorate_observation(std::move(result), session.question, tools.thresholds, tools.scorer, tools.graph);
  if (decorated.error) session.plugin_errors.push_back(*decorated.error);
  turn.observation = decorated.result.observation_text;
  for (const auto& r : decorated.reports) {
    if (r.needs_clarification) {
      turn.hint = r.kind;
      session.last_hint = r.kind;
    }
  }
  session.history.push_back(std::move(turn));
  emit(sink, EventKind::observation, {{"text", *session.history.back().observation}});
  for (const auto& r : decorated.reports) {
    session.reports.push_back(r);
    if (!r.needs_clarification) continue;
    json candidates = json::array();
    for (const auto& [label, p] : r.posterior) candidates.push_back({{"label", label}, {"p", p}});
    emit(sink, EventKind::hint,
         {{"kind", to_string(r.kind)},
          {"score", r.score},
          {"threshold", r.threshold},
          {"candidates", candidates},
          {"text", text::trim(r.hint_text)}});
  }
}

void resume(SessionState& session, std::string_view clarification, const EventSink& sink) {
  if (session.status != Status::awaiting_clarification) {
    throw StateError("session is " + std::string(to_string(session.status)) + ", not awaiting clarification");
  }
  if (text::trim(clarification).empty()) throw InvalidArgument("clarification must be non-empty");
  session.history.back().clarification = std::string(clarification);
  if (session.last_hint == AmbiguityKind::entity) {
    ++session.clarification_count_entity;
  } else {
    ++session.clarification_count_intent;
  }
  session.status = Status::running;
  emit(sink, EventKind::clarification_response, {{"text", std::string(clarification)}});
}

std::string simulate_user(std::string_view golden_sparql, std::string_view request, llm::ChatBackend& backend,
                          const PromptSet& prompts) {
  if (text::trim(request).empty()) throw InvalidArgument("clarification request must be non-empty");
  return text::trim(llm::complete(build_user_prompt(golden_sparql, request, prompts), backend).text);
}

std::string SimulatedClarifier::respond(const SessionState&, std::string_view request) {
  return simulate_user(golden_, request, backend_, prompts_);
}

Transcript run_session(std::string_view question, const SessionConfig& config, llm::ChatBackend& agent,
                       AmbiguityScorer& scorer, const KnowledgeGraph& graph, Clarifier& clarifier,
                       const PromptSet& prompts, std::optional<std::string> golden_sparql,
                       const std::function<void(const Event&)>& observer) {
  config.thresholds.validate();
  Transcript transcript;
  transcript.golden_sparql = std::move(golden_sparql);
  auto& session = transcript.session;
  session.question = std::string(question);
  session.turn_budget = config.turn_budget;

  EventSink sink = [&](EventKind kind, json payload) {
    Event e{transcript.events.size() + 1, kind, std::move(payload), now_iso8601()};
    transcript.events.push_back(e);
    if (observer) observer(transcript.events.back());
  };

  ToolContext tools{graph, config.thresholds, scorer, config.tool_k};
  while (session.status == Status::running) {
    if (budget_exhausted(session)) {
      fail(session, "budget", sink);
      break;
    }
    auto action = next_action(session, prompts, agent, sink);
    if (session.status != Status::running) break;
    step(session, action, tools, sink);
    if (session.status == Status::awaiting_clarification) {
      std::string response;
      try {
        response = clarifier.respond(session, action.args.at(0));
      } catch (const Error& e) {
        fail(session, std::string("clarification failed: ") + e.what(), sink);
        break;
      }
      if (text::trim(response).empty()) {
        fail(session, "empty clarification", sink);
        break;
      }
      resume(session, response, sink);
    }
  }
  return transcript;
}

}  // namespace kgqa::dialogue
