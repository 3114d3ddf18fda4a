#include "fluc/compile.hpp"

#include <sstream>

namespace fluc::sim {

CompileError::CompileError(const std::string& kind, const std::string& message, int source_line)
    : Error(kind, message), source_line_(source_line) {}

namespace {

class Compiler {
 public:
  Compiler(const GeoPoint& home, const EnuPoint& start, const CompileDeps& deps)
      : home_(home), pos_(start), deps_(deps) {
    out_.obstacles = deps.obstacles;
  }

  CompiledMission run(const mission::ValidatedMission& mission) {
    const auto& calls = mission.calls;
    for (std::size_t i = 0; i < calls.size(); ++i) {
      const auto& call = calls[i];
      line_ = call.source_line;
      try {
        lower(call, i > 0 && calls[i - 1].name == "set_return");
      } catch (const CompileError&) {
        throw;
      } catch (const Error& e) {
        fail(e.kind(), e.what());
      }
    }
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& kind, const std::string& what) const {
    std::ostringstream os;
    os << "line " << line_ << ": " << what;
    throw CompileError(kind, os.str(), line_);
  }

  void lower(const mission::BoundCall& call, bool after_return) {
    const std::string& n = call.name;
    if (n == "takeoff") {
      // The validator adds takeoff(20) to scripts without one; a vehicle that
      // is already flying keeps its altitude instead.
      if (call.inserted && pos_.up > 0) return;
      pos_.up = call.number(0);
      emit(ItemKind::Takeoff, pos_);
    } else if (n == "go_to_real_world_coords") {
      EnuPoint target = geo::enu_from_geo(home_, {call.number(0), call.number(1), 0.0});
      target.up = call.number(2);
      fly_to(target);
    } else if (n == "move_relative") {
      fly_to(pos_ + EnuPoint{call.number(0), call.number(1), call.number(2)});
    } else if (n == "go_to_place") {
      if (!deps_.resolve_place) fail("NotFound", "no geocoder available for '" + call.text(0) + "'");
      const GeoPoint place = deps_.resolve_place(call.text(0));
      EnuPoint target = geo::enu_from_geo(home_, {place.lat, place.lon, 0.0});
      target.up = kPlaceAltitudeM;
      fly_to(target);
    } else if (n == "fly_waypoints") {
      const auto& flat = call.list(0);
      std::vector<EnuPoint> wps;
      for (std::size_t k = 0; k + 2 < flat.size(); k += 3) wps.push_back({flat[k], flat[k + 1], flat[k + 2]});
      if (call.number(1) != 0.0) {
        const planner::Route route = planner::optimize_order(pos_, wps);
        for (std::size_t k = 1; k < route.points.size(); ++k) fly_to(route.points[k]);
      } else {
        for (const auto& w : wps) fly_to(w);
      }
    } else if (n == "set_obstacle") {
      const planner::Obstacle o{call.number(0), call.number(1), call.number(2), call.number(3)};
      planner::require_valid(o);
      out_.obstacles.push_back(o);
    } else if (n == "upload_and_start_supply_mission") {
      const auto &x = call.list(0), &y = call.list(1), &z = call.list(2), &t = call.list(3);
      std::vector<supply::GroundUser> gus;
      for (std::size_t k = 0; k < x.size(); ++k) gus.push_back({x[k], y[k], z[k], t[k]});
      out_.ground_users.insert(out_.ground_users.end(), gus.begin(), gus.end());
      for (const auto& w : supply::supply_waypoints(gus, pos_, deps_.radio)) fly_to(w);
    } else if (n == "set_return") {
      const EnuPoint home_above{0.0, 0.0, pos_.up};
      route_leg(home_above);
      emit(ItemKind::ReturnToLaunch, home_above);
      pos_ = {0.0, 0.0, 0.0};
    } else if (n == "land") {
      if (after_return) return;  // the return already ends on the ground
      pos_.up = 0.0;
      emit(ItemKind::Land, pos_);
    } else {
      fail("UnknownPrimitive", "no lowering for " + n);
    }
  }

  void emit(ItemKind kind, const EnuPoint& target) {
    MissionItem item;
    item.kind = kind;
    item.target = target;
    item.source_line = line_;
    out_.items.push_back(item);
  }

  // Detour points (all but the two ends) become intermediate waypoints.
  void route_leg(const EnuPoint& target) {
    if (out_.obstacles.empty()) return;
    const auto path = planner::route_around(pos_, target, out_.obstacles, deps_.margin);
    for (std::size_t k = 1; k + 1 < path.size(); ++k) emit(ItemKind::Waypoint, path[k]);
  }

  void fly_to(const EnuPoint& target) {
    if (!geo::is_finite(target)) fail("OutOfRange", "target is not finite");
    if (target.up < 0) fail("OutOfRange", "target altitude below ground");
    route_leg(target);
    emit(ItemKind::Waypoint, target);
    pos_ = target;
  }

  GeoPoint home_;
  EnuPoint pos_;
  const CompileDeps& deps_;
  CompiledMission out_;
  int line_ = 0;
};

}  // namespace

CompiledMission compile(const mission::ValidatedMission& mission, const GeoPoint& home, const EnuPoint& start,
                        const CompileDeps& deps) {
  return Compiler(home, start, deps).run(mission);
}

}  // namespace fluc::sim
