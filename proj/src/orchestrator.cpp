#include "fluc/orchestrator.hpp"

#include <algorithm>

#include "json.hpp"

namespace fluc::orchestrator {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Event log

std::uint64_t EventLog::append(std::string type, std::string stage, std::string data) {
  std::uint64_t seq;
  {
    std::lock_guard lock(mu_);
    seq = events_.size() + 1;
    events_.push_back({seq, std::move(type), std::move(stage), std::move(data)});
  }
  cv_.notify_all();
  return seq;
}

std::vector<Event> EventLog::since(std::uint64_t after) const {
  std::lock_guard lock(mu_);
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::vector<Event> EventLog::wait_since(std::uint64_t after, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return events_.size() > after; });
  if (after >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(after), events_.end()};
}

std::uint64_t EventLog::last_seq() const {
  std::lock_guard lock(mu_);
  return events_.size();
}

// ---------------------------------------------------------------------------
// Labels

const char* to_string(Label l) {
  switch (l) {
    case Label::Successful: return "Successful";
    case Label::PartiallyCorrect: return "PartiallyCorrect";
    case Label::Unsuccessful: return "Unsuccessful";
  }
  return "?";
}

std::optional<Label> label_from_string(std::string_view s) {
  for (Label l : {Label::Successful, Label::PartiallyCorrect, Label::Unsuccessful}) {
    if (s == to_string(l)) return l;
  }
  return std::nullopt;
}

Label classify(const MissionOutcome& o, bool oracle_pass) {
  if (!o.attempts.final_mission) return Label::Unsuccessful;
  if (o.attempts.prompts_used == 1 && o.compiled && oracle_pass) return Label::Successful;
  return Label::PartiallyCorrect;
}

// ---------------------------------------------------------------------------
// Outcome serialization

namespace {

ordered_json point_json(const geo::EnuPoint& p) { return {{"east", p.east}, {"north", p.north}, {"up", p.up}}; }

ordered_json item_json(const sim::MissionItem& it) {
  ordered_json j;
  j["kind"] = sim::to_string(it.kind);
  j["east"] = it.target.east;
  j["north"] = it.target.north;
  j["up"] = it.target.up;
  j["acceptance_radius"] = it.acceptance_radius;
  j["source_line"] = it.source_line;
  return j;
}

ordered_json obstacle_json(const planner::Obstacle& o) {
  return {{"east", o.center_east}, {"north", o.center_north}, {"radius", o.radius}, {"height", o.height}};
}

ordered_json gu_json(const supply::GroundUser& g) {
  return {{"x", g.x}, {"y", g.y}, {"z", g.z}, {"traffic", g.traffic}};
}

ordered_json exchange_json(const llm::Exchange& ex) {
  ordered_json sent = ordered_json::array();
  for (const auto& m : ex.sent) sent.push_back({{"role", m.role}, {"content", m.content}});
  ordered_json reply;
  reply["text"] = ex.reply.text;
  reply["prompt_tokens"] = ex.reply.prompt_tokens;
  reply["completion_tokens"] = ex.reply.completion_tokens;
  reply["approximate"] = ex.reply.approximate;
  reply["latency_s"] = ex.reply.latency_s;
  return {{"model", ex.model}, {"sent", sent}, {"reply", reply}};
}

ordered_json sample_json(const sim::TraceSample& s) { return ordered_json::parse(sim::to_json_line(s)); }

sim::ItemKind item_kind_from(const std::string& s) {
  for (auto k : {sim::ItemKind::Takeoff, sim::ItemKind::Waypoint, sim::ItemKind::ReturnToLaunch, sim::ItemKind::Land}) {
    if (s == sim::to_string(k)) return k;
  }
  throw Error("Protocol", "unknown item kind '" + s + "'");
}

}  // namespace

std::string to_json(const MissionOutcome& o) {
  ordered_json j;
  j["id"] = o.id;
  j["prompt"] = o.prompt;
  j["model"] = o.model;

  ordered_json a;
  a["prompts_used"] = o.attempts.prompts_used;
  a["termination"] = llm::to_string(o.attempts.termination);
  a["last_error"] = o.attempts.last_error;
  a["completion_tokens"] = o.attempts.completion_tokens();
  a["prompt_tokens"] = o.attempts.prompt_tokens();
  a["mission"] = o.attempts.final_mission ? ordered_json(mission::render(o.attempts.final_mission->to_script()))
                                          : ordered_json(nullptr);
  a["exchanges"] = ordered_json::array();
  for (const auto& ex : o.attempts.exchanges) a["exchanges"].push_back(exchange_json(ex));
  j["attempts"] = a;

  j["compiled"] = o.compiled;
  j["items"] = ordered_json::array();
  for (const auto& it : o.items) j["items"].push_back(item_json(it));
  j["obstacles"] = ordered_json::array();
  for (const auto& ob : o.obstacles) j["obstacles"].push_back(obstacle_json(ob));
  j["ground_users"] = ordered_json::array();
  for (const auto& g : o.ground_users) j["ground_users"].push_back(gu_json(g));
  if (o.trace) {
    j["trace"] = ordered_json::array();
    for (const auto& s : o.trace->samples) j["trace"].push_back(sample_json(s));
  } else {
    j["trace"] = nullptr;
  }
  if (o.succeeded()) {
    j["failure"] = nullptr;
  } else {
    j["failure"] = {{"stage", o.failure_stage}, {"kind", o.failure_kind}, {"message", o.failure}, {"line", o.failure_line}};
  }
  j["wall_time_s"] = o.wall_time_s;
  return j.dump();
}

MissionOutcome outcome_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    MissionOutcome o;
    o.id = j.at("id").get<std::uint64_t>();
    o.prompt = j.at("prompt").get<std::string>();
    o.model = j.at("model").get<std::string>();

    const json& a = j.at("attempts");
    o.attempts.prompts_used = a.at("prompts_used").get<int>();
    const auto term = a.at("termination").get<std::string>();
    if (term == llm::to_string(llm::Termination::Executable)) {
      o.attempts.termination = llm::Termination::Executable;
    } else if (term == llm::to_string(llm::Termination::AttemptsExhausted)) {
      o.attempts.termination = llm::Termination::AttemptsExhausted;
    } else {
      throw Error("Protocol", "unknown termination '" + term + "'");
    }
    o.attempts.last_error = a.at("last_error").get<std::string>();
    for (const json& e : a.at("exchanges")) {
      llm::Exchange ex;
      ex.model = e.at("model").get<std::string>();
      for (const json& m : e.at("sent")) ex.sent.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
      const json& r = e.at("reply");
      ex.reply.text = r.at("text").get<std::string>();
      ex.reply.prompt_tokens = r.at("prompt_tokens").get<std::int64_t>();
      ex.reply.completion_tokens = r.at("completion_tokens").get<std::int64_t>();
      ex.reply.approximate = r.at("approximate").get<bool>();
      ex.reply.latency_s = r.at("latency_s").get<double>();
      o.attempts.exchanges.push_back(std::move(ex));
    }
    if (o.attempts.termination == llm::Termination::Executable) {
      if (o.attempts.exchanges.empty()) throw Error("Protocol", "executable outcome without exchanges");
      auto r = mission::interpret(o.attempts.exchanges.back().reply.text, mission::default_library());
      if (!r.mission) throw Error("Protocol", "final reply does not validate: " + r.first_error);
      o.attempts.final_mission = std::move(r.mission);
    }

    o.compiled = j.at("compiled").get<bool>();
    for (const json& it : j.at("items")) {
      sim::MissionItem m;
      m.kind = item_kind_from(it.at("kind").get<std::string>());
      m.target = {it.at("east").get<double>(), it.at("north").get<double>(), it.at("up").get<double>()};
      m.acceptance_radius = it.at("acceptance_radius").get<double>();
      m.source_line = it.at("source_line").get<int>();
      o.items.push_back(m);
    }
    for (const json& ob : j.at("obstacles")) {
      o.obstacles.push_back({ob.at("east").get<double>(), ob.at("north").get<double>(), ob.at("radius").get<double>(),
                             ob.at("height").get<double>()});
    }
    for (const json& g : j.at("ground_users")) {
      o.ground_users.push_back(
          {g.at("x").get<double>(), g.at("y").get<double>(), g.at("z").get<double>(), g.at("traffic").get<double>()});
    }
    if (!j.at("trace").is_null()) {
      std::string lines;
      for (const json& s : j.at("trace")) lines += s.dump() + "\n";
      o.trace = sim::trace_from_jsonl(lines);
    }
    if (!j.at("failure").is_null()) {
      const json& f = j.at("failure");
      o.failure_stage = f.at("stage").get<std::string>();
      o.failure_kind = f.at("kind").get<std::string>();
      o.failure = f.at("message").get<std::string>();
      o.failure_line = f.at("line").get<int>();
      if (o.failure_stage.empty()) throw Error("Protocol", "failure without a stage");
    }
    o.wall_time_s = j.at("wall_time_s").get<double>();
    return o;
  } catch (const json::exception& e) {
    throw Error("Protocol", std::string("malformed outcome: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == "Protocol") throw;
    throw Error("Protocol", std::string("malformed outcome: ") + e.what());
  }
}

bool same_outcome(const MissionOutcome& a, const MissionOutcome& b) {
  const auto calls = [](const llm::AttemptLog& l) {
    return l.final_mission ? std::optional(l.final_mission->calls) : std::nullopt;
  };
  return a.id == b.id && a.prompt == b.prompt && a.model == b.model && a.attempts.exchanges == b.attempts.exchanges &&
         a.attempts.prompts_used == b.attempts.prompts_used && a.attempts.last_error == b.attempts.last_error &&
         a.attempts.termination == b.attempts.termination && calls(a.attempts) == calls(b.attempts) &&
         a.compiled == b.compiled && a.items == b.items && a.obstacles == b.obstacles &&
         a.ground_users.size() == b.ground_users.size() &&
         std::equal(a.ground_users.begin(), a.ground_users.end(), b.ground_users.begin(),
                    [](const supply::GroundUser& x, const supply::GroundUser& y) {
                      return x.x == y.x && x.y == y.y && x.z == y.z && x.traffic == y.traffic;
                    }) &&
         a.trace == b.trace && a.failure_stage == b.failure_stage && a.failure_kind == b.failure_kind &&
         a.failure == b.failure && a.failure_line == b.failure_line && a.wall_time_s == b.wall_time_s;
}

// ---------------------------------------------------------------------------
// Session

std::unique_ptr<llm::Backend> default_backend(const Config& config) {
  if (!config.replay_fixture.empty()) return llm::ReplayBackend::from_file(config.replay_fixture, config.endpoint.model);
  return std::make_unique<llm::OllamaBackend>(config.endpoint);
}

Session::Session(std::uint64_t id, Config config, BackendFactory factory, places::Resolver* resolver)
    : id_(id),
      config_(std::move(config)),
      factory_(std::move(factory)),
      resolver_(resolver),
      init_prompt_(llm::build_init_prompt(mission::default_library(), config_.rules, config_.home)),
      vehicle_(std::make_unique<sim::Vehicle>(config_.home)) {
  snapshot_ = vehicle_->state();
}

std::string Session::model() const {
  std::lock_guard lock(mu_);
  return config_.endpoint.model;
}

bool Session::set_model(const std::string& model) {
  std::lock_guard lock(mu_);
  if (busy_ || model.empty()) return false;
  config_.endpoint.model = model;
  backend_.reset();
  return true;
}

std::optional<std::uint64_t> Session::try_begin() {
  std::lock_guard lock(mu_);
  if (busy_) return std::nullopt;
  busy_ = true;
  return next_outcome_++;
}

bool Session::busy() const {
  std::lock_guard lock(mu_);
  return busy_;
}

sim::VehicleState Session::vehicle_state() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

std::vector<planner::Obstacle> Session::obstacles() const {
  std::lock_guard lock(mu_);
  return obstacles_;
}

std::vector<MissionOutcome> Session::outcomes() const {
  std::lock_guard lock(mu_);
  return outcomes_;
}

std::optional<MissionOutcome> Session::outcome(std::uint64_t id) const {
  std::lock_guard lock(mu_);
  for (const auto& o : outcomes_) {
    if (o.id == id) return o;
  }
  return std::nullopt;
}

void Session::publish_state(const std::string& stage, bool ok, const std::string& detail) {
  const sim::VehicleState s = vehicle_->state();
  {
    std::lock_guard lock(mu_);
    snapshot_ = s;
  }
  ordered_json j;
  j["stage"] = stage;
  j["ok"] = ok;
  j["detail"] = detail;
  j["phase"] = sim::to_string(s.phase);
  j["position"] = point_json(s.position);
  events_.append("state", stage, j.dump());
}

namespace {

struct StageFailure {
  std::string stage;
  std::string kind;
  std::string message;
  int line = 0;
};

std::string kind_of(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  return err ? err->kind() : "Internal";
}

std::string summary_json(const MissionOutcome& o, const sim::VehicleState& s) {
  ordered_json j;
  j["id"] = o.id;
  j["label"] = to_string(classify(o, o.succeeded()));
  j["prompts_used"] = o.attempts.prompts_used;
  j["termination"] = llm::to_string(o.attempts.termination);
  j["compiled"] = o.compiled;
  j["failure_stage"] = o.failure_stage;
  j["failure"] = o.failure;
  j["phase"] = sim::to_string(s.phase);
  j["position"] = point_json(s.position);
  return j.dump();
}

}  // namespace

MissionOutcome Session::run(std::uint64_t outcome_id, const std::string& text) {
  const auto t0 = std::chrono::steady_clock::now();
  MissionOutcome out;
  out.id = outcome_id;
  out.prompt = text;
  std::optional<StageFailure> failure;

  Config cfg;
  std::vector<planner::Obstacle> known;
  {
    std::lock_guard lock(mu_);
    cfg = config_;
    known = obstacles_;
  }
  out.model = cfg.endpoint.model;

  // Language model with correction.
  std::vector<llm::Exchange> seen;
  try {
    if (!backend_) backend_ = factory_(cfg);
    const auto observer = [&](const llm::Exchange& ex, int attempt, const std::string& error) {
      seen.push_back(ex);
      ordered_json j;
      j["attempt"] = attempt;
      j["valid"] = error.empty();
      j["error"] = error;
      j["reply"] = ex.reply.text;
      j["prompt_tokens"] = ex.reply.prompt_tokens;
      j["completion_tokens"] = ex.reply.completion_tokens;
      j["approximate"] = ex.reply.approximate;
      j["latency_s"] = ex.reply.latency_s;
      events_.append("attempt", "attempt", j.dump());
    };
    out.attempts = llm::correction_loop(*backend_, init_prompt_, text, cfg.max_attempts, mission::default_library(),
                                        observer);
    if (!out.attempts.final_mission) {
      failure = StageFailure{"llm", "AttemptsExhausted", out.attempts.last_error, 0};
    }
  } catch (const std::exception& e) {
    out.attempts.exchanges = seen;
    out.attempts.prompts_used = static_cast<int>(seen.size()) + 1;
    out.attempts.last_error = e.what();
    out.attempts.termination = llm::Termination::AttemptsExhausted;
    failure = StageFailure{"llm", kind_of(e), e.what(), 0};
  }

  // Lowering to autopilot items.
  if (!failure) {
    sim::CompileDeps deps;
    deps.obstacles = known;
    deps.resolve_place = [this](const std::string& name) {
      if (!resolver_) throw Error("OfflineMiss", "no geocoder available for '" + name + "'");
      return resolver_->resolve(name).point;
    };
    ordered_json j;
    try {
      const sim::CompiledMission cm = sim::compile(*out.attempts.final_mission, cfg.home, vehicle_->state().position, deps);
      out.compiled = true;
      out.items = cm.items;
      out.obstacles = cm.obstacles;
      out.ground_users = cm.ground_users;
      {
        std::lock_guard lock(mu_);
        obstacles_ = cm.obstacles;
      }
      j["ok"] = true;
    } catch (const sim::CompileError& e) {
      failure = StageFailure{"compile", e.kind(), e.what(), e.source_line()};
      j["ok"] = false;
      j["kind"] = e.kind();
      j["error"] = e.what();
      j["line"] = e.source_line();
    } catch (const std::exception& e) {
      failure = StageFailure{"compile", kind_of(e), e.what(), 0};
      j["ok"] = false;
      j["kind"] = kind_of(e);
      j["error"] = e.what();
      j["line"] = 0;
    }
    j["items"] = ordered_json::array();
    for (const auto& it : out.items) j["items"].push_back(item_json(it));
    j["obstacles"] = ordered_json::array();
    for (const auto& ob : out.obstacles) j["obstacles"].push_back(obstacle_json(ob));
    j["ground_users"] = ordered_json::array();
    for (const auto& g : out.ground_users) j["ground_users"].push_back(gu_json(g));
    events_.append("compile", "compile", j.dump());
  }

  // Upload and start.
  if (!failure) {
    const sim::Phase p = vehicle_->state().phase;
    if (p == sim::Phase::Disarmed || p == sim::Phase::Landed) vehicle_->arm();
    const sim::Ack up = vehicle_->upload(out.items);
    publish_state("upload", up.ok, up.reason);
    if (!up.ok) failure = StageFailure{"upload", "Rejected", up.reason, 0};
  }
  if (!failure) {
    const sim::Ack st = vehicle_->start();
    publish_state("start", st.ok, st.reason);
    if (!st.ok) failure = StageFailure{"start", "Rejected", st.reason, 0};
  }

  // Flight.
  if (!failure) {
    sim::RunOptions opts;
    opts.sim_timeout = cfg.sim_timeout_s;
    opts.speed_factor = cfg.speed_factor;
    opts.on_sample = [this](const sim::TraceSample& s) {
      {
        std::lock_guard lock(mu_);
        snapshot_ = vehicle_->state();
      }
      events_.append("telemetry", "telemetry", sim::to_json_line(s));
    };
    try {
      out.trace = sim::run_until(*vehicle_, [](const sim::Vehicle& v) { return v.mission_done(); }, opts);
    } catch (const sim::SimTimeout& e) {
      out.trace = e.trace();
      vehicle_->hold();
      failure = StageFailure{"execution", e.kind(), e.what(), 0};
    }
  }

  if (failure) {
    out.failure_stage = failure->stage;
    out.failure_kind = failure->kind;
    out.failure = failure->message;
    out.failure_line = failure->line;
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  publish_state(failure ? "failed" : "done", !failure, failure ? failure->message : std::string());

  const sim::VehicleState final_state = vehicle_->state();
  {
    std::lock_guard lock(mu_);
    outcomes_.push_back(out);
    busy_ = false;
  }
  events_.append("outcome", "outcome", summary_json(out, final_state));
  return out;
}

MissionOutcome handle_prompt(Session& session, const std::string& text) {
  const auto id = session.try_begin();
  if (!id) {
    MissionOutcome o;
    o.prompt = text;
    o.model = session.model();
    o.failure_stage = "busy";
    o.failure_kind = "MissionActive";
    o.failure = "mission active: wait for the current mission to finish";
    return o;
  }
  return session.run(*id, text);
}

// ---------------------------------------------------------------------------
// Manager

SessionManager::SessionManager(Config defaults, BackendFactory factory)
    : defaults_(std::move(defaults)), factory_(std::move(factory)) {
  cache_ = std::make_unique<places::PlaceCache>(defaults_.geocache);
  try {
    cache_->load();
  } catch (const Error&) {
    // A corrupt cache starts over empty and is rewritten on the next lookup.
  }
  std::map<std::string, places::PlaceResult> fixtures;
  if (!defaults_.place_fixtures.empty()) fixtures = places::load_place_fixtures(defaults_.place_fixtures);
  if (!defaults_.offline_places) transport_ = std::make_unique<places::NominatimTransport>(defaults_.geocoder_url);
  resolver_ = std::make_unique<places::Resolver>(*cache_, std::move(fixtures), transport_.get(), defaults_.offline_places);
}

Session& SessionManager::create() { return create(defaults_); }

Session& SessionManager::create(const Config& config) {
  std::lock_guard lock(mu_);
  const std::uint64_t id = next_id_++;
  auto s = std::make_unique<Session>(id, config, factory_, resolver_.get());
  Session& ref = *s;
  sessions_.emplace(id, std::move(s));
  return ref;
}

Session& SessionManager::get(std::uint64_t id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error("UnknownSession", "no session " + std::to_string(id));
  return *it->second;
}

std::vector<std::uint64_t> SessionManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::uint64_t> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace fluc::orchestrator
