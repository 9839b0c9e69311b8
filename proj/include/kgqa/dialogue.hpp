// SPDX-License-Identifier: Apache-2.0
//
// The interactive QA loop. The agent model proposes one action per turn
// ("Thought: ... / Action: Tool(...)" or "Done: <sparql>"), tools run against
// the graph, the ambiguity plugin may append a hint, and AskForClarification
// suspends the session until a clarification arrives.
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgqa/ambiguity.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/sparql.hpp"
#include "kgqa/toolbox.hpp"

namespace kgqa::dialogue {

using json = nlohmann::json;

enum class ActionKind { tool_call, done, malformed };

struct Action {
  ActionKind kind = ActionKind::malformed;
  std::optional<Tool> tool;
  std::vector<std::string> args;
  std::optional<std::string> final_sparql;
  std::optional<std::string> thought;
  std::string raw;  // the completion text, kept for malformed actions

  friend bool operator==(const Action&, const Action&) = default;
};

/// Never throws; anything outside the grammar yields kind = malformed.
Action parse_action(std::string_view completion_text);

/// Canonical text of an action; parse_action inverts it.
std::string format_action(const Action& action);

/// Double-quoted argument with backslash escapes.
std::string quote_arg(std::string_view arg);

struct Turn {
  Action action;
  std::optional<std::string> observation;
  std::optional<std::string> clarification;
  /// Kind of the last hint appended to this turn's observation.
  std::optional<AmbiguityKind> hint;
};

enum class Status { running, awaiting_clarification, finished, failed };

std::string_view to_string(Status status);

struct SessionState {
  std::string question;
  std::vector<Turn> history;
  Status status = Status::running;
  std::optional<std::string> final_sparql;
  std::optional<sparql::ResultTable> answers;
  std::size_t turn_budget = 10;
  int clarification_count_entity = 0;
  int clarification_count_intent = 0;
  std::string failure_reason;
  std::optional<AmbiguityKind> last_hint;
  std::vector<AmbiguityReport> reports;
  std::vector<std::string> plugin_errors;
};

/// "Thought: t\nAction: ...\nObservation: o" plus "\nClarification: c" when
/// present; done turns end with "Done: <sparql>".
std::string serialize_turn(const Turn& turn);
std::string serialize_history(const SessionState& session);

/// Prompt assets loaded from a directory: instruction.txt,
/// user_simulator.txt, question_generation.txt and exemplars/*.txt (sorted
/// by file name).
struct PromptSet {
  std::string instruction;
  std::vector<std::string> exemplars;
  std::string user_simulator;
  std::string question_generation;
  /// How many exemplars go into agent prompts.
  std::size_t max_exemplars = static_cast<std::size_t>(-1);

  static PromptSet load(const std::filesystem::path& dir);
};

llm::ChatPrompt build_agent_prompt(const SessionState& session, const PromptSet& prompts);

inline constexpr std::string_view kInvalidActionObservation =
    "Invalid action format; use Action: Tool(...) or Done: ...";
inline constexpr std::size_t kMaxParseAttempts = 3;

// ---------------------------------------------------------------------------
// Events

enum class EventKind {
  thought,
  tool_call,
  observation,
  hint,
  clarification_request,
  clarification_response,
  final_answer,
  error
};

std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view s);

struct Event {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::thought;
  json payload;
  std::string timestamp;  // ISO-8601 UTC
};

json event_to_json(const Event& e, bool include_timestamp = true);
Event event_from_json(const json& j);

/// Receives kind and payload; sequencing is the receiver's job.
using EventSink = std::function<void(EventKind, json)>;

/// Table as JSON: {columns, rows} with typed cells.
json table_to_json(const sparql::ResultTable& table);
sparql::ResultTable table_from_json(const json& j);

// ---------------------------------------------------------------------------
// Loop

struct ToolContext {
  const KnowledgeGraph& graph;
  Thresholds thresholds;
  AmbiguityScorer& scorer;
  std::size_t k = 10;
};

/// Asks the agent model for the next action. Malformed completions get a
/// corrective observation and are retried; after kMaxParseAttempts in a row
/// the session fails with "action-parse-exhausted". Backend errors fail the
/// session with the error text. Pre: status = running.
Action next_action(SessionState& session, const PromptSet& prompts, llm::ChatBackend& backend,
                   const EventSink& sink = {});

/// Applies an action. Pre: status = running.
void step(SessionState& session, const Action& action, ToolContext& tools, const EventSink& sink = {});

/// Records the clarification on the pending AskForClarification turn.
/// Throws StateError unless awaiting, InvalidArgument on empty text.
void resume(SessionState& session, std::string_view clarification, const EventSink& sink = {});

/// The dummy user: answers a clarification request knowing the gold query.
std::string simulate_user(std::string_view golden_sparql, std::string_view request, llm::ChatBackend& backend,
                          const PromptSet& prompts);

llm::ChatPrompt build_user_prompt(std::string_view golden_sparql, std::string_view request, const PromptSet& prompts);

class Clarifier {
 public:
  virtual ~Clarifier() = default;
  virtual std::string respond(const SessionState& session, std::string_view request) = 0;
};

class SimulatedClarifier final : public Clarifier {
 public:
  SimulatedClarifier(std::string golden_sparql, llm::ChatBackend& backend, const PromptSet& prompts)
      : golden_(std::move(golden_sparql)), backend_(backend), prompts_(prompts) {}
  std::string respond(const SessionState& session, std::string_view request) override;

 private:
  std::string golden_;
  llm::ChatBackend& backend_;
  const PromptSet& prompts_;
};

struct SessionConfig {
  Thresholds thresholds;
  std::size_t turn_budget = 10;
  std::size_t tool_k = 10;
};

struct Transcript {
  SessionState session;
  std::optional<std::string> item_id;
  std::optional<std::string> golden_sparql;
  std::vector<Event> events;

  json to_json(bool include_timestamps = true) const;
  static Transcript from_json(const json& j);
};

/// Runs next_action/step until the session terminates, routing suspensions
/// to the clarifier. `observer` sees every event as it is recorded.
Transcript run_session(std::string_view question, const SessionConfig& config, llm::ChatBackend& agent,
                       AmbiguityScorer& scorer, const KnowledgeGraph& graph, Clarifier& clarifier,
                       const PromptSet& prompts, std::optional<std::string> golden_sparql = std::nullopt,
                       const std::function<void(const Event&)>& observer = {});

}  // namespace kgqa::dialogue
