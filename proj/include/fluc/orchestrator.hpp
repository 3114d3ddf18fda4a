#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fluc/compile.hpp"
#include "fluc/config.hpp"
#include "fluc/geolocation.hpp"
#include "fluc/llm.hpp"
#include "fluc/sim.hpp"

namespace fluc::orchestrator {

/// One entry of a session's append-only event log. `type` is the stream event
/// name (attempt, compile, state, telemetry, outcome); `stage` refines state
/// events (upload, start, done, failed). `data` is a JSON document.
struct Event {
  std::uint64_t seq = 0;
  std::string type;
  std::string stage;
  std::string data;

  bool operator==(const Event&) const = default;
};

class EventLog {
 public:
  std::uint64_t append(std::string type, std::string stage, std::string data);
  /// Events with seq > after.
  std::vector<Event> since(std::uint64_t after) const;
  /// Blocks until an event with seq > after exists or the timeout passes.
  std::vector<Event> wait_since(std::uint64_t after, std::chrono::milliseconds timeout) const;
  std::uint64_t last_seq() const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::vector<Event> events_;
};

struct MissionOutcome {
  std::uint64_t id = 0;
  std::string prompt;
  std::string model;
  llm::AttemptLog attempts;
  bool compiled = false;
  std::vector<sim::MissionItem> items;
  std::vector<planner::Obstacle> obstacles;
  std::vector<supply::GroundUser> ground_users;
  std::optional<sim::TelemetryTrace> trace;
  /// Empty on success, else one of busy, llm, compile, upload, start, execution.
  std::string failure_stage;
  std::string failure_kind;
  std::string failure;
  int failure_line = 0;
  double wall_time_s = 0.0;

  bool succeeded() const { return failure_stage.empty(); }
};

enum class Label { Successful, PartiallyCorrect, Unsuccessful };

const char* to_string(Label l);
std::optional<Label> label_from_string(std::string_view s);

/// Successful: one prompt, compiled, goal met. PartiallyCorrect: some reply
/// validated but the goal was missed or took more than one prompt.
/// Unsuccessful: no reply ever validated.
Label classify(const MissionOutcome& o, bool oracle_pass);

std::string to_json(const MissionOutcome& o);
/// Throws Error{"Protocol"} on malformed input.
MissionOutcome outcome_from_json(std::string_view text);
/// Field-by-field comparison (the validated mission by its bound calls).
bool same_outcome(const MissionOutcome& a, const MissionOutcome& b);

using BackendFactory = std::function<std::unique_ptr<llm::Backend>(const Config&)>;

/// Replay backend when config.replay_fixture is set, otherwise the chat endpoint.
std::unique_ptr<llm::Backend> default_backend(const Config& config);

class Session {
 public:
  Session(std::uint64_t id, Config config, BackendFactory factory, places::Resolver* resolver);

  std::uint64_t id() const { return id_; }
  const Config& config() const { return config_; }
  std::string model() const;
  /// Switches the model for the next prompt; refused while busy.
  bool set_model(const std::string& model);

  /// Reserves the next outcome id, or nothing when a mission is active.
  std::optional<std::uint64_t> try_begin();
  /// Runs a prompt reserved by try_begin. Never throws for pipeline failures.
  MissionOutcome run(std::uint64_t outcome_id, const std::string& text);

  bool busy() const;
  sim::VehicleState vehicle_state() const;
  std::vector<planner::Obstacle> obstacles() const;
  std::vector<MissionOutcome> outcomes() const;
  std::optional<MissionOutcome> outcome(std::uint64_t id) const;
  EventLog& events() { return events_; }
  const EventLog& events() const { return events_; }

 private:
  void publish_state(const std::string& stage, bool ok, const std::string& detail);

  const std::uint64_t id_;
  Config config_;
  BackendFactory factory_;
  places::Resolver* resolver_;
  std::string init_prompt_;

  mutable std::mutex mu_;  // guards everything below except vehicle_ and backend_
  bool busy_ = false;
  std::uint64_t next_outcome_ = 1;
  std::vector<MissionOutcome> outcomes_;
  std::vector<planner::Obstacle> obstacles_;
  sim::VehicleState snapshot_;

  // Touched only by the thread that holds the busy flag.
  std::unique_ptr<llm::Backend> backend_;
  std::unique_ptr<sim::Vehicle> vehicle_;

  EventLog events_;
};

/// try_begin + run; a busy session yields an outcome failed at stage "busy".
MissionOutcome handle_prompt(Session& session, const std::string& text);

class SessionManager {
 public:
  explicit SessionManager(Config defaults, BackendFactory factory = default_backend);

  Session& create();
  Session& create(const Config& config);
  /// Throws Error{"UnknownSession"}.
  Session& get(std::uint64_t id);
  std::vector<std::uint64_t> list() const;
  const Config& defaults() const { return defaults_; }

 private:
  Config defaults_;
  BackendFactory factory_;
  std::unique_ptr<places::PlaceCache> cache_;
  std::unique_ptr<places::GeocodeTransport> transport_;
  std::unique_ptr<places::Resolver> resolver_;
  mutable std::mutex mu_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, std::unique_ptr<Session>> sessions_;
};

}  // namespace fluc::orchestrator
