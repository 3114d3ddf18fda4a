#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fluc/mission.hpp"
#include "fluc/planner.hpp"
#include "fluc/sim.hpp"
#include "fluc/supply.hpp"

namespace fluc::sim {

inline constexpr double kPlaceAltitudeM = 20.0;

/// Wraps the failing module's error with the offending call's source line.
class CompileError : public Error {
 public:
  CompileError(const std::string& kind, const std::string& message, int source_line);
  int source_line() const { return source_line_; }

 private:
  int source_line_;
};

struct CompileDeps {
  /// Geocoder for go_to_place; throws Error{"NotFound"} and friends.
  std::function<GeoPoint(const std::string&)> resolve_place;
  /// Obstacles already known to the session; set_obstacle calls add to these.
  std::vector<planner::Obstacle> obstacles;
  double margin = planner::kDefaultMarginM;
  supply::RadioModel radio;
};

struct CompiledMission {
  std::vector<MissionItem> items;
  std::vector<planner::Obstacle> obstacles;  // session obstacles plus those declared by the script
  std::vector<supply::GroundUser> ground_users;  // from supply calls
};

/// Lowers a validated mission to autopilot items, tracking a virtual position
/// starting at `start` so relative moves chain. Every horizontal leg is routed
/// around the known obstacles. Throws CompileError.
CompiledMission compile(const mission::ValidatedMission& mission, const GeoPoint& home, const EnuPoint& start,
                        const CompileDeps& deps);

}  // namespace fluc::sim
