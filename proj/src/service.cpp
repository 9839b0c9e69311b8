// SPDX-License-Identifier: Apache-2.0
#include "kgqa/service.hpp"

#include <condition_variable>
#include <thread>

#include <httplib.h>

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

namespace kgqa::service {

json Poll::to_json() const {
  json evs = json::array();
  for (const auto& e : events) evs.push_back(dialogue::event_to_json(e));
  json j = {{"events", evs}, {"status", status}, {"awaiting_clarification", awaiting_clarification}};
  if (awaiting_clarification) j["pending_request"] = pending_request;
  return j;
}

struct SessionService::Session {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<dialogue::Event> events;
  std::string status = "running";
  bool awaiting = false;
  std::uint64_t pending_request = 0;
  bool done = false;
  bool cancelled = false;
  std::optional<std::string> mailbox;
  std::optional<dialogue::Transcript> transcript;
  std::thread worker;
};

namespace {

// Hands the loop whatever the client posts, blocking until it arrives.
class MailboxClarifier final : public dialogue::Clarifier {
 public:
  using Wait = std::function<std::string()>;
  explicit MailboxClarifier(Wait wait) : wait_(std::move(wait)) {}
  std::string respond(const dialogue::SessionState&, std::string_view) override { return wait_(); }

 private:
  Wait wait_;
};

}  // namespace

SessionService::SessionService(const KnowledgeGraph& graph, const dialogue::PromptSet& prompts,
                               dialogue::SessionConfig config, llm::ChatBackend& agent, AmbiguityScorer& scorer)
    : graph_(graph), prompts_(prompts), config_(config), agent_(agent), scorer_(scorer) {
  config_.thresholds.validate();
}

SessionService::~SessionService() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    all.swap(sessions_);
  }
  for (auto& [_, s] : all) {
    {
      std::lock_guard lock(s->mu);
      s->cancelled = true;
    }
    s->cv.notify_all();
    if (s->worker.joinable()) s->worker.join();
  }
}

std::string SessionService::create(const std::string& question) {
  if (text::trim(question).empty()) throw InvalidArgument("question must be non-empty");
  auto s = std::make_shared<Session>();
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = "s" + std::to_string(next_id_++);
    sessions_[id] = s;
  }
  s->worker = std::thread([this, s_raw = s.get(), question] {
    auto& s = *s_raw;
    MailboxClarifier clarifier([&s]() -> std::string {
      std::unique_lock lock(s.mu);
      s.cv.wait(lock, [&] { return s.mailbox.has_value() || s.cancelled; });
      if (!s.mailbox) throw StateError("session cancelled while awaiting clarification");
      auto text = std::move(*s.mailbox);
      s.mailbox.reset();
      return text;
    });
    auto observer = [&s](const dialogue::Event& e) {
      {
        std::lock_guard lock(s.mu);
        s.events.push_back(e);
        // Same critical section as the event, so a poller that sees the
        // request also sees the flag.
        if (e.kind == dialogue::EventKind::clarification_request) {
          s.awaiting = true;
          s.pending_request = e.seq;
          s.status = "awaiting_clarification";
        } else if (e.kind == dialogue::EventKind::clarification_response) {
          s.status = "running";
        }
      }
      s.cv.notify_all();
    };
    dialogue::Transcript t;
    try {
      t = dialogue::run_session(question, config_, agent_, scorer_, graph_, clarifier, prompts_, std::nullopt,
                                observer);
    } catch (const std::exception& e) {
      t.session.question = question;
      t.session.status = dialogue::Status::failed;
      t.session.failure_reason = e.what();
    }
    {
      std::lock_guard lock(s.mu);
      // Every log ends in exactly one terminal event, even when the loop threw.
      auto terminal = [](const dialogue::Event& e) {
        return e.kind == dialogue::EventKind::final_answer || e.kind == dialogue::EventKind::error;
      };
      if (s.events.empty() || !terminal(s.events.back())) {
        s.events.push_back({s.events.size() + 1, dialogue::EventKind::error,
                            {{"reason", t.session.failure_reason.empty() ? "aborted" : t.session.failure_reason}}, ""});
      }
      s.status = std::string(dialogue::to_string(t.session.status));
      s.awaiting = false;
      s.done = true;
      s.transcript = std::move(t);
    }
    s.cv.notify_all();
  });
  return id;
}

std::shared_ptr<SessionService::Session> SessionService::find(const std::string& id) {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session " + id);
  return it->second;
}

Poll SessionService::events(const std::string& id, std::uint64_t after, std::chrono::milliseconds wait) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait_for(lock, wait, [&] { return s->events.size() > after || s->done || s->cancelled; });
  Poll p;
  for (std::size_t i = std::min<std::size_t>(after, s->events.size()); i < s->events.size(); ++i) {
    p.events.push_back(s->events[i]);
  }
  p.status = s->status;
  p.awaiting_clarification = s->awaiting;
  p.pending_request = s->awaiting ? s->pending_request : 0;
  return p;
}

void SessionService::clarify(const std::string& id, const std::string& text,
                             std::optional<std::uint64_t> request_seq) {
  if (text::trim(text).empty()) throw InvalidArgument("clarification must be non-empty");
  auto s = find(id);
  {
    std::lock_guard lock(s->mu);
    if (!s->awaiting) throw StateError("session " + id + " is not awaiting a clarification");
    if (request_seq && *request_seq != s->pending_request) {
      throw StateError("clarification request " + std::to_string(*request_seq) + " is not open");
    }
    s->awaiting = false;
    s->mailbox = text;
  }
  s->cv.notify_all();
}

std::optional<dialogue::Transcript> SessionService::transcript(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->transcript;
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply(res, status, {{"error", message}});
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const NotFoundError& e) {
    reply_error(res, 404, e.what());
  } catch (const StateError& e) {
    reply_error(res, 409, e.what());
  } catch (const InvalidArgument& e) {
    reply_error(res, 400, e.what());
  } catch (const json::exception& e) {
    reply_error(res, 400, std::string("bad JSON: ") + e.what());
  } catch (const std::exception& e) {
    reply_error(res, 500, e.what());
  }
}

std::uint64_t query_number(const httplib::Request& req, const char* name, std::uint64_t fallback) {
  if (!req.has_param(name)) return fallback;
  try {
    return std::stoull(req.get_param_value(name));
  } catch (const std::logic_error&) {
    throw InvalidArgument(std::string("bad query parameter ") + name);
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"status", "ok"}}); });

  server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = json::parse(req.body);
      auto id = service.create(body.at("question").get<std::string>());
      reply(res, 201, {{"id", id}});
    });
  });

  server.Get(R"(/sessions/([^/]+)/events)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto after = query_number(req, "after", 0);
      auto wait = std::min<std::uint64_t>(query_number(req, "wait_ms", 0), 30000);
      reply(res, 200, service.events(req.matches[1], after, std::chrono::milliseconds(wait)).to_json());
    });
  });

  server.Post(R"(/sessions/([^/]+)/clarification)", [&service](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = json::parse(req.body);
      std::optional<std::uint64_t> seq;
      if (body.contains("request_seq")) seq = body.at("request_seq").get<std::uint64_t>();
      service.clarify(req.matches[1], body.at("text").get<std::string>(), seq);
      reply(res, 202, {{"ok", true}});
    });
  });
}

}  // namespace kgqa::service
