#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluc/error.hpp"
#include "fluc/geodesy.hpp"

namespace fluc::sim {

using geo::EnuPoint;
using geo::GeoPoint;

enum class Phase { Disarmed, Armed, TakingOff, EnRoute, Returning, Landing, Landed };

const char* to_string(Phase p);
std::optional<Phase> phase_from_string(std::string_view s);

/// Edges of the flight-phase graph. Staying in the same phase is always allowed;
/// Landed -> Armed re-arms the vehicle for a later mission.
bool transition_allowed(Phase from, Phase to);
bool airborne(Phase p);

enum class ItemKind { Takeoff, Waypoint, ReturnToLaunch, Land };

const char* to_string(ItemKind k);

inline constexpr double kDefaultAcceptanceM = 2.0;

struct MissionItem {
  ItemKind kind = ItemKind::Waypoint;
  EnuPoint target;  // absolute, local frame anchored at home
  double acceptance_radius = kDefaultAcceptanceM;
  int source_line = 0;

  bool operator==(const MissionItem&) const = default;
};

struct VehicleParams {
  double cruise_speed = 10.0;  // m/s horizontal
  double climb_speed = 2.5;    // m/s vertical
};

struct VehicleState {
  Phase phase = Phase::Disarmed;
  EnuPoint position;
  GeoPoint home;
  double sim_time = 0.0;
  std::size_t item_index = 0;
  bool mission_complete = false;
  double battery_proxy = 0.0;  // meters flown
};

struct Ack {
  bool ok = true;
  std::string reason;

  static Ack yes() { return {}; }
  static Ack no(std::string why) { return {false, std::move(why)}; }
};

class Vehicle {
 public:
  explicit Vehicle(const GeoPoint& home, VehicleParams params = {});

  Ack arm();
  /// Replaces the stored mission; refused while a mission is being flown.
  Ack upload(std::vector<MissionItem> items);
  Ack start();
  /// EnRoute -> Returning.
  Ack abort();
  /// Stop where the vehicle is and hover (or stay on the ground). Used when a
  /// mission is cut short.
  void hold();

  /// Advance the simulation by dt seconds, dt in (0, 1]. Throws Error{"NonPositiveDt"}.
  const VehicleState& step(double dt);

  const VehicleState& state() const { return state_; }
  const VehicleParams& params() const { return params_; }
  const std::vector<MissionItem>& mission() const { return mission_; }
  /// True once the last item is reached (hovering) or the vehicle has landed.
  bool mission_done() const;
  bool in_progress() const;

 private:
  void advance_item();
  void set_phase(Phase p);
  void move_toward(const EnuPoint& target, double dt, bool vertical_first);

  VehicleParams params_;
  VehicleState state_;
  std::vector<MissionItem> mission_;
  bool started_ = false;
  bool held_ = false;
};

inline constexpr double kSimDt = 0.1;

struct TraceSample {
  double t = 0.0;
  EnuPoint position;
  GeoPoint geo;
  Phase phase = Phase::Disarmed;

  bool operator==(const TraceSample&) const = default;
};

struct TelemetryTrace {
  std::vector<TraceSample> samples;

  bool operator==(const TelemetryTrace&) const = default;
};

class SimTimeout : public Error {
 public:
  SimTimeout(const std::string& message, TelemetryTrace trace);
  const TelemetryTrace& trace() const { return trace_; }

 private:
  TelemetryTrace trace_;
};

struct RunOptions {
  double sim_timeout = 600.0;
  /// 0 runs as fast as possible; 1 paces the loop against the wall clock.
  double speed_factor = 0.0;
  /// Called with every 1 Hz sample as it is taken.
  std::function<void(const TraceSample&)> on_sample;
};

using Predicate = std::function<bool(const Vehicle&)>;

/// Steps with dt = 0.1 s until the predicate holds (then on to the next whole
/// second) or sim_timeout elapses. Samples at 1 Hz, starting with the current state.
/// Throws SimTimeout carrying the trace so far.
TelemetryTrace run_until(Vehicle& vehicle, const Predicate& done, const RunOptions& options = {});

TraceSample sample_of(const VehicleState& s);

std::string to_json_line(const TraceSample& s);
std::string to_jsonl(const TelemetryTrace& trace);
/// Throws Error{"TraceFormat"}.
TelemetryTrace trace_from_jsonl(std::string_view text);

}  // namespace fluc::sim
