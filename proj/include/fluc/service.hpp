#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fluc/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace fluc::service {

/// HTTP JSON API over a SessionManager:
///   POST /v1/sessions                  -> 201 {"id"}
///   GET  /v1/sessions                  -> {"sessions": [ids]}
///   GET  /v1/sessions/{id}             -> vehicle state, obstacles, outcomes
///   GET  /v1/sessions/{id}/outcomes/{o}
///   POST /v1/sessions/{id}/prompt      {"text"} -> 202 {"outcome_id"}, 409 while busy
///   GET  /v1/sessions/{id}/events      text/event-stream; ?once=1 replays and closes
///   GET  /v1/health
class Service {
 public:
  explicit Service(orchestrator::SessionManager& sessions);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Port 0 picks a free port. Returns the bound port. Throws Error{"Bind"}.
  int bind(const std::string& host, int port);
  /// Serves on a background thread; bind first.
  void start();
  /// Blocks the caller; bind first.
  void listen();
  /// Stops accepting, closes event streams and waits for running prompts.
  void stop();
  int port() const { return port_; }

 private:
  void routes();

  orchestrator::SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::atomic<bool> stopping_{false};
  std::mutex workers_mu_;
  std::vector<std::thread> workers_;
  int port_ = 0;
};

/// One server-sent-events frame.
std::string sse_frame(const orchestrator::Event& e);

/// GET /v1/sessions/{id} body.
std::string session_json(const orchestrator::Session& s);

}  // namespace fluc::service
