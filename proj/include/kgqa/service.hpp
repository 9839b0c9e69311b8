// SPDX-License-Identifier: Apache-2.0
//
// Interactive sessions over HTTP. Each session runs its dialogue loop on its
// own thread; clients long-poll the event log and post clarifications while
// the session is suspended.
//
//   POST /sessions                        {"question"} -> 201 {"id"}
//   GET  /sessions/{id}/events?after=&wait_ms=
//                                         -> {"events", "status", "awaiting_clarification"}
//   POST /sessions/{id}/clarification     {"text", "request_seq"?} -> 202; 409 unless
//                                         awaiting (that request, when named)
//   GET  /healthz
#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "kgqa/ambiguity.hpp"
#include "kgqa/dialogue.hpp"
#include "kgqa/graph.hpp"
#include "kgqa/llm.hpp"

namespace httplib {
class Server;
}

namespace kgqa::service {

using json = nlohmann::json;

struct Poll {
  std::vector<dialogue::Event> events;  // seq > after
  std::string status;
  bool awaiting_clarification = false;
  std::uint64_t pending_request = 0;  // seq of the open clarification_request, 0 if none

  json to_json() const;
};

class SessionService {
 public:
  /// All collaborators must outlive the service and tolerate concurrent use.
  SessionService(const KnowledgeGraph& graph, const dialogue::PromptSet& prompts, dialogue::SessionConfig config,
                 llm::ChatBackend& agent, AmbiguityScorer& scorer);
  /// Cancels suspended sessions and joins every session thread.
  ~SessionService();

  SessionService(const SessionService&) = delete;
  SessionService& operator=(const SessionService&) = delete;

  /// Starts a session; throws InvalidArgument for an empty question.
  std::string create(const std::string& question);

  /// Events after `after`, waiting up to `wait` for at least one new event
  /// or the end of the session. Throws NotFoundError.
  Poll events(const std::string& id, std::uint64_t after, std::chrono::milliseconds wait);

  /// Delivers a clarification. Throws NotFoundError, StateError when the
  /// session is not awaiting one, or when `request_seq` names a request other
  /// than the open one (e.g. a second submission), and InvalidArgument for
  /// empty text.
  void clarify(const std::string& id, const std::string& text,
               std::optional<std::uint64_t> request_seq = std::nullopt);

  /// Final transcript once the session has ended; nullopt while running.
  std::optional<dialogue::Transcript> transcript(const std::string& id);

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id);

  const KnowledgeGraph& graph_;
  const dialogue::PromptSet& prompts_;
  dialogue::SessionConfig config_;
  llm::ChatBackend& agent_;
  AmbiguityScorer& scorer_;

  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Installs the routes above.
void register_routes(httplib::Server& server, SessionService& service);

}  // namespace kgqa::service
