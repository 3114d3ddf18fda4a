#include <sstream>

#include "fluc/mission.hpp"

namespace fluc::mission {

namespace {

ParamSpec number(std::string name, std::string units, std::optional<double> min = {},
                 std::optional<double> max = {}, bool min_exclusive = false) {
  return {std::move(name), ValueKind::Number, std::move(units), min, max, min_exclusive};
}

ParamSpec list(std::string name, std::string units, std::optional<double> min = {},
               std::optional<double> max = {}, bool min_exclusive = false) {
  return {std::move(name), ValueKind::NumberList, std::move(units), min, max, min_exclusive};
}

ParamSpec text(std::string name) { return {std::move(name), ValueKind::String, "", {}, {}, false}; }

constexpr double kMaxAltM = 500.0;
constexpr double kMaxOffsetM = 10000.0;

}  // namespace

ValueKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return ValueKind::Number;
    case 1: return ValueKind::NumberList;
    default: return ValueKind::String;
  }
}

const char* to_string(ValueKind k) {
  switch (k) {
    case ValueKind::Number: return "number";
    case ValueKind::NumberList: return "number list";
    case ValueKind::String: return "string";
  }
  return "?";
}

std::string FunctionSpec::signature() const {
  std::ostringstream os;
  os << name << "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << params[i].name;
  }
  os << ")";
  return os.str();
}

const std::vector<FunctionSpec>& default_library() {
  static const std::vector<FunctionSpec> library = {
      {"go_to_real_world_coords",
       {number("lat", "deg", -90.0, 90.0), number("lon", "deg", -180.0, 180.0),
        number("alt", "m", 0.0, kMaxAltM)},
       "Fly to a GPS position; alt is meters above the home ground level."},
      {"move_relative",
       {number("d_east", "m", -kMaxOffsetM, kMaxOffsetM), number("d_north", "m", -kMaxOffsetM, kMaxOffsetM),
        number("d_up", "m", -kMaxOffsetM, kMaxOffsetM)},
       "Move by an offset in meters (east, north, up) from the current position."},
      {"set_return", {}, "Return to the launch position and land there."},
      {"takeoff", {number("alt", "m", 0.0, kMaxAltM, true)}, "Take off vertically to alt meters."},
      {"land", {}, "Land at the current position."},
      {"go_to_place", {text("name")}, "Fly to a named place, resolved through OpenStreetMap."},
      {"fly_waypoints",
       {list("points", "m"), number("optimize", "flag", 0.0, 1.0)},
       "Fly through local waypoints given as a flat [east, north, up, ...] list; optimize=1 reorders "
       "them for the shortest path."},
      {"set_obstacle",
       {number("cx", "m"), number("cy", "m"), number("radius", "m", 0.0, 1000.0, true),
        number("height", "m", 0.0, 1000.0, true)},
       "Declare a cylindrical obstacle (local east/north center, radius, height); later legs avoid it."},
      {"upload_and_start_supply_mission",
       {list("x", "m"), list("y", "m"), list("z", "m", 0.0), list("traffic", "Mbit/s", 0.0, {}, true)},
       "Position the UAV to serve ground users at local x, y, z with the given traffic demands."},
  };
  return library;
}

}  // namespace fluc::mission
