#include "fluc/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include "json.hpp"
#include <sstream>
#include <thread>

namespace fluc::sim {

namespace {

constexpr Phase kAllPhases[] = {Phase::Disarmed, Phase::Armed,     Phase::TakingOff, Phase::EnRoute,
                                Phase::Returning, Phase::Landing, Phase::Landed};

}  // namespace

const char* to_string(Phase p) {
  switch (p) {
    case Phase::Disarmed: return "Disarmed";
    case Phase::Armed: return "Armed";
    case Phase::TakingOff: return "TakingOff";
    case Phase::EnRoute: return "EnRoute";
    case Phase::Returning: return "Returning";
    case Phase::Landing: return "Landing";
    case Phase::Landed: return "Landed";
  }
  return "?";
}

std::optional<Phase> phase_from_string(std::string_view s) {
  for (Phase p : kAllPhases)
    if (s == to_string(p)) return p;
  return std::nullopt;
}

bool transition_allowed(Phase from, Phase to) {
  if (from == to) return true;
  switch (from) {
    case Phase::Disarmed: return to == Phase::Armed;
    case Phase::Armed: return to == Phase::TakingOff;
    case Phase::TakingOff: return to == Phase::EnRoute;
    case Phase::EnRoute: return to == Phase::Returning || to == Phase::Landing;
    case Phase::Returning: return to == Phase::Landing;
    case Phase::Landing: return to == Phase::Landed;
    case Phase::Landed: return to == Phase::Armed;
  }
  return false;
}

bool airborne(Phase p) {
  return p == Phase::TakingOff || p == Phase::EnRoute || p == Phase::Returning || p == Phase::Landing;
}

const char* to_string(ItemKind k) {
  switch (k) {
    case ItemKind::Takeoff: return "Takeoff";
    case ItemKind::Waypoint: return "Waypoint";
    case ItemKind::ReturnToLaunch: return "ReturnToLaunch";
    case ItemKind::Land: return "Land";
  }
  return "?";
}

Vehicle::Vehicle(const GeoPoint& home, VehicleParams params) : params_(params) {
  geo::require_valid(home);
  if (!(params.cruise_speed > 0) || !(params.climb_speed > 0) || !std::isfinite(params.cruise_speed) ||
      !std::isfinite(params.climb_speed))
    throw Error("OutOfRange", "vehicle speeds must be positive");
  state_.home = home;
}

void Vehicle::set_phase(Phase p) {
  if (!transition_allowed(state_.phase, p))
    throw std::logic_error(std::string("illegal phase change ") + to_string(state_.phase) + " -> " + to_string(p));
  state_.phase = p;
}

bool Vehicle::mission_done() const { return started_ && state_.mission_complete; }

bool Vehicle::in_progress() const {
  if (!started_ || state_.mission_complete) return false;
  return airborne(state_.phase);
}

Ack Vehicle::arm() {
  if (state_.phase != Phase::Disarmed && state_.phase != Phase::Landed)
    return Ack::no(std::string("cannot arm while ") + to_string(state_.phase));
  set_phase(Phase::Armed);
  started_ = false;
  held_ = false;
  state_.mission_complete = false;
  state_.item_index = 0;
  return Ack::yes();
}

Ack Vehicle::upload(std::vector<MissionItem> items) {
  if (items.empty()) return Ack::no("empty mission");
  for (const auto& it : items) {
    if (!geo::is_finite(it.target) || it.target.up < 0) return Ack::no("mission item target out of range");
    if (!(it.acceptance_radius > 0)) return Ack::no("acceptance radius must be positive");
  }
  if (in_progress()) return Ack::no("mission in progress");
  mission_ = std::move(items);
  return Ack::yes();
}

Ack Vehicle::start() {
  if (mission_.empty()) return Ack::no("no mission");
  if (state_.phase == Phase::Armed) {
    if (mission_.front().kind != ItemKind::Takeoff) return Ack::no("first item must be a takeoff");
    set_phase(Phase::TakingOff);
  } else if (state_.phase == Phase::EnRoute && state_.mission_complete) {
    if (mission_.front().kind == ItemKind::ReturnToLaunch) set_phase(Phase::Returning);
    if (mission_.front().kind == ItemKind::Land) set_phase(Phase::Landing);
  } else {
    return Ack::no(std::string("cannot start while ") + to_string(state_.phase));
  }
  started_ = true;
  held_ = false;
  state_.mission_complete = false;
  state_.item_index = 0;
  return Ack::yes();
}

Ack Vehicle::abort() {
  if (state_.phase != Phase::EnRoute) return Ack::no(std::string("cannot abort while ") + to_string(state_.phase));
  set_phase(Phase::Returning);
  state_.mission_complete = false;
  held_ = false;
  return Ack::yes();
}

void Vehicle::hold() {
  if (state_.phase == Phase::TakingOff) set_phase(Phase::EnRoute);
  held_ = airborne(state_.phase);
  if (started_) state_.mission_complete = true;
}

void Vehicle::advance_item() {
  if (state_.item_index + 1 >= mission_.size()) {
    state_.mission_complete = true;
    if (state_.phase == Phase::TakingOff) set_phase(Phase::EnRoute);
    return;
  }
  ++state_.item_index;
  if (state_.phase == Phase::TakingOff) set_phase(Phase::EnRoute);
  switch (mission_[state_.item_index].kind) {
    case ItemKind::ReturnToLaunch: set_phase(Phase::Returning); break;
    case ItemKind::Land: set_phase(Phase::Landing); break;
    default: break;
  }
}

void Vehicle::move_toward(const EnuPoint& target, double dt, bool vertical_only) {
  const EnuPoint before = state_.position;
  EnuPoint& p = state_.position;
  if (!vertical_only) {
    const double de = target.east - p.east, dn = target.north - p.north;
    const double d = std::sqrt(de * de + dn * dn);
    const double reach = params_.cruise_speed * dt;
    if (d <= reach) {
      p.east = target.east;
      p.north = target.north;
    } else {
      p.east += de * (reach / d);
      p.north += dn * (reach / d);
    }
  }
  const double du = target.up - p.up;
  const double climb = params_.climb_speed * dt;
  p.up = std::abs(du) <= climb ? target.up : p.up + std::copysign(climb, du);
  state_.battery_proxy += geo::euclid3_m(before, p);
}

const VehicleState& Vehicle::step(double dt) {
  if (!(dt > 0)) throw Error("NonPositiveDt", "step dt must be positive");
  if (!(dt <= 1.0)) throw Error("OutOfRange", "step dt must not exceed 1 s");
  state_.sim_time += dt;
  if (held_ || !started_ || !airborne(state_.phase)) return state_;

  const MissionItem& item = mission_[state_.item_index];
  switch (state_.phase) {
    case Phase::TakingOff: {
      move_toward(item.target, dt, true);
      if (state_.position.up == item.target.up) advance_item();
      break;
    }
    case Phase::EnRoute: {
      if (state_.mission_complete) break;
      if (item.kind == ItemKind::Takeoff) {
        move_toward(item.target, dt, true);
        if (state_.position.up == item.target.up) advance_item();
        break;
      }
      move_toward(item.target, dt, false);
      const bool last = state_.item_index + 1 == mission_.size();
      const double d = geo::euclid3_m(state_.position, item.target);
      if (last ? d == 0.0 : d <= item.acceptance_radius) advance_item();
      break;
    }
    case Phase::Returning: {
      const EnuPoint home_above{0.0, 0.0, state_.position.up};
      move_toward(home_above, dt, false);
      if (state_.position.east == 0.0 && state_.position.north == 0.0) set_phase(Phase::Landing);
      break;
    }
    case Phase::Landing: {
      EnuPoint spot{state_.position.east, state_.position.north, 0.0};
      if (item.kind == ItemKind::Land) spot = {item.target.east, item.target.north, 0.0};
      if (spot.east != state_.position.east || spot.north != state_.position.north) {
        move_toward({spot.east, spot.north, state_.position.up}, dt, false);
        break;
      }
      move_toward(spot, dt, true);
      if (state_.position.up == 0.0) {
        set_phase(Phase::Landed);
        state_.mission_complete = true;
      }
      break;
    }
    default: break;
  }
  return state_;
}

SimTimeout::SimTimeout(const std::string& message, TelemetryTrace trace)
    : Error("Timeout", message), trace_(std::move(trace)) {}

TraceSample sample_of(const VehicleState& s) {
  return {s.sim_time, s.position, geo::geo_from_enu(s.home, s.position), s.phase};
}

TelemetryTrace run_until(Vehicle& vehicle, const Predicate& done, const RunOptions& options) {
  if (!(options.sim_timeout > 0)) throw Error("OutOfRange", "sim timeout must be positive");
  constexpr int kStepsPerSample = 10;
  TelemetryTrace trace;
  const double t0 = vehicle.state().sim_time;
  auto emit = [&](double t) {
    TraceSample s = sample_of(vehicle.state());
    s.t = t;
    trace.samples.push_back(s);
    if (options.on_sample) options.on_sample(s);
  };
  emit(t0);
  if (done(vehicle)) return trace;

  const auto wall_start = std::chrono::steady_clock::now();
  bool fired = false;
  for (long k = 1;; ++k) {
    for (int i = 0; i < kStepsPerSample; ++i) {
      vehicle.step(kSimDt);
      if (!fired && done(vehicle)) fired = true;
    }
    if (options.speed_factor > 0) {
      const auto due = wall_start + std::chrono::duration<double>(static_cast<double>(k) / options.speed_factor);
      std::this_thread::sleep_until(due);
    }
    emit(t0 + static_cast<double>(k));
    if (fired) return trace;
    if (static_cast<double>(k) >= options.sim_timeout) {
      std::ostringstream os;
      os << "mission did not finish within " << options.sim_timeout << " s of simulated time";
      throw SimTimeout(os.str(), std::move(trace));
    }
  }
}

std::string to_json_line(const TraceSample& s) {
  nlohmann::ordered_json j;
  j["t"] = s.t;
  j["east"] = s.position.east;
  j["north"] = s.position.north;
  j["up"] = s.position.up;
  j["lat"] = s.geo.lat;
  j["lon"] = s.geo.lon;
  j["alt"] = s.geo.alt;
  j["phase"] = to_string(s.phase);
  return j.dump();
}

std::string to_jsonl(const TelemetryTrace& trace) {
  std::string out;
  for (const auto& s : trace.samples) {
    out += to_json_line(s);
    out += '\n';
  }
  return out;
}

TelemetryTrace trace_from_jsonl(std::string_view text) {
  TelemetryTrace trace;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TraceSample s;
      s.t = j.at("t").get<double>();
      s.position = {j.at("east").get<double>(), j.at("north").get<double>(), j.at("up").get<double>()};
      s.geo = {j.at("lat").get<double>(), j.at("lon").get<double>(), j.at("alt").get<double>()};
      const auto phase = phase_from_string(j.at("phase").get<std::string>());
      if (!phase) throw Error("TraceFormat", "unknown phase");
      s.phase = *phase;
      trace.samples.push_back(s);
    } catch (const nlohmann::json::exception& e) {
      throw Error("TraceFormat", "telemetry line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("TraceFormat", "telemetry line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace fluc::sim
