#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "fluc/mission.hpp"

namespace fluc::mission {

namespace {

constexpr std::size_t kMaxGroundUsers = 32;
constexpr std::size_t kMaxWaypoints = 64;

bool is_motion(std::string_view name) {
  return name == "go_to_real_world_coords" || name == "move_relative" || name == "go_to_place" ||
         name == "fly_waypoints" || name == "upload_and_start_supply_mission" || name == "set_return";
}

class Validator {
 public:
  explicit Validator(const std::vector<FunctionSpec>& library) {
    for (const auto& spec : library) by_name_.emplace(spec.name, &spec);
  }

  ValidationResult run(const MissionScript& script) {
    std::vector<BoundCall> bound;
    for (const auto& call : script.calls) {
      if (auto b = bind(call)) bound.push_back(std::move(*b));
    }
    ValidationResult result;
    if (errors_.empty()) check_ordering(bound, result);
    result.errors = std::move(errors_);
    if (result.errors.empty()) {
      result.mission = ValidatedMission{std::move(bound_out_), script};
    }
    return result;
  }

 private:
  void error(int line, SemanticErrorKind kind, std::string msg) {
    errors_.push_back({line, kind, std::move(msg)});
  }

  std::optional<BoundCall> bind(const PrimitiveCall& call) {
    const auto it = by_name_.find(call.name);
    if (it == by_name_.end()) {
      error(call.source_line, SemanticErrorKind::UnknownPrimitive,
            "unknown primitive '" + call.name + "'");
      return std::nullopt;
    }
    const FunctionSpec& spec = *it->second;
    const std::size_t before = errors_.size();
    if (call.args.size() > spec.params.size()) {
      error(call.source_line, SemanticErrorKind::BadArity,
            spec.signature() + " takes " + std::to_string(spec.params.size()) + " argument(s), got " +
                std::to_string(call.args.size() + call.kwargs.size()));
      return std::nullopt;
    }
    std::vector<std::optional<Value>> slots(spec.params.size());
    for (std::size_t i = 0; i < call.args.size(); ++i) slots[i] = call.args[i];
    for (const auto& [key, value] : call.kwargs) {
      const auto p = std::find_if(spec.params.begin(), spec.params.end(),
                                  [&](const ParamSpec& ps) { return ps.name == key; });
      if (p == spec.params.end()) {
        error(call.source_line, SemanticErrorKind::BadArity,
              spec.signature() + " has no parameter named '" + key + "'");
        continue;
      }
      auto& slot = slots[static_cast<std::size_t>(p - spec.params.begin())];
      if (slot) {
        error(call.source_line, SemanticErrorKind::BadArity,
              spec.signature() + " got multiple values for '" + key + "'");
        continue;
      }
      slot = value;
    }
    BoundCall out{call.name, {}, call.source_line, false};
    for (std::size_t i = 0; i < spec.params.size(); ++i) {
      const ParamSpec& ps = spec.params[i];
      if (!slots[i]) {
        error(call.source_line, SemanticErrorKind::BadArity,
              spec.signature() + " is missing argument '" + ps.name + "'");
        continue;
      }
      check_param(call, spec, ps, *slots[i]);
      out.args.push_back(*slots[i]);
    }
    if (errors_.size() == before) check_call_specific(out);
    if (errors_.size() != before) return std::nullopt;
    return out;
  }

  void check_param(const PrimitiveCall& call, const FunctionSpec& spec, const ParamSpec& ps, const Value& v) {
    if (kind_of(v) != ps.kind) {
      error(call.source_line, SemanticErrorKind::BadKind,
            spec.name + ": argument '" + ps.name + "' must be a " + to_string(ps.kind) + ", got a " +
                to_string(kind_of(v)));
      return;
    }
    auto check = [&](double x) {
      const bool below = ps.min && (ps.min_exclusive ? x <= *ps.min : x < *ps.min);
      const bool above = ps.max && x > *ps.max;
      if (below || above) {
        std::ostringstream os;
        os << spec.name << ": argument '" << ps.name << "' = " << render_number(x) << " is out of range ";
        os << (ps.min_exclusive ? "(" : "[") << (ps.min ? render_number(*ps.min) : "-inf") << ", "
           << (ps.max ? render_number(*ps.max) : "inf") << "]";
        if (!ps.units.empty()) os << " " << ps.units;
        error(call.source_line, SemanticErrorKind::RangeViolation, os.str());
        return false;
      }
      return true;
    };
    if (ps.kind == ValueKind::Number) {
      check(std::get<double>(v));
    } else if (ps.kind == ValueKind::NumberList) {
      for (double x : std::get<NumberList>(v))
        if (!check(x)) break;
    }
  }

  void check_call_specific(const BoundCall& c) {
    const int line = c.source_line;
    if (c.name == "upload_and_start_supply_mission") {
      const std::size_t n = c.list(0).size();
      if (c.list(1).size() != n || c.list(2).size() != n || c.list(3).size() != n) {
        error(line, SemanticErrorKind::ListLengthMismatch,
              "upload_and_start_supply_mission: list length mismatch (x " + std::to_string(n) + ", y " +
                  std::to_string(c.list(1).size()) + ", z " + std::to_string(c.list(2).size()) +
                  ", traffic " + std::to_string(c.list(3).size()) + ")");
      } else if (n == 0 || n > kMaxGroundUsers) {
        error(line, SemanticErrorKind::RangeViolation,
              "upload_and_start_supply_mission: between 1 and 32 ground users required, got " +
                  std::to_string(n));
      }
    } else if (c.name == "fly_waypoints") {
      const auto& pts = c.list(0);
      if (pts.size() % 3 != 0) {
        error(line, SemanticErrorKind::ListLengthMismatch,
              "fly_waypoints: points must be a flat list of [east, north, up] triples, got " +
                  std::to_string(pts.size()) + " numbers");
      } else if (pts.empty() || pts.size() / 3 > kMaxWaypoints) {
        error(line, SemanticErrorKind::RangeViolation,
              "fly_waypoints: between 1 and 64 waypoints required, got " + std::to_string(pts.size() / 3));
      } else {
        for (std::size_t i = 2; i < pts.size(); i += 3) {
          if (pts[i] < 0.0) {
            error(line, SemanticErrorKind::RangeViolation,
                  "fly_waypoints: waypoint " + std::to_string(i / 3 + 1) + " has negative altitude");
            break;
          }
        }
      }
      const double flag = c.number(1);
      if (flag != 0.0 && flag != 1.0)
        error(line, SemanticErrorKind::RangeViolation, "fly_waypoints: optimize must be 0 or 1");
    } else if (c.name == "go_to_place") {
      const auto& name = c.text(0);
      if (std::all_of(name.begin(), name.end(), [](unsigned char ch) { return std::isspace(ch); }))
        error(line, SemanticErrorKind::RangeViolation, "go_to_place: place name is empty");
    }
  }

  void check_ordering(const std::vector<BoundCall>& calls, ValidationResult&) {
    bool airborne = false;
    bool flew = false;
    bool landed = false;
    bool returned = false;
    for (const auto& c : calls) {
      if (landed) {
        error(c.source_line, SemanticErrorKind::OrderingViolation, "call after land(): " + c.name);
        continue;
      }
      if (returned && c.name != "land") {
        error(c.source_line, SemanticErrorKind::OrderingViolation,
              "call after set_return(): " + c.name + " (only land() may follow)");
        continue;
      }
      if (c.name == "takeoff") {
        if (airborne) {
          error(c.source_line, SemanticErrorKind::OrderingViolation, "takeoff() while already airborne");
          continue;
        }
        airborne = flew = true;
      } else if (is_motion(c.name)) {
        if (c.name == "set_return" && returned) {
          error(c.source_line, SemanticErrorKind::OrderingViolation, "more than one set_return()");
          continue;
        }
        if (!airborne) {
          bound_out_.push_back(
              BoundCall{"takeoff", {Value{kImplicitTakeoffAltM}}, c.source_line, true});
          airborne = flew = true;
        }
        if (c.name == "set_return") returned = true;
      } else if (c.name == "land") {
        if (!airborne) {
          error(c.source_line, SemanticErrorKind::OrderingViolation,
                "land() while the vehicle is on the ground");
          continue;
        }
        landed = true;
      }
      bound_out_.push_back(c);
    }
    if (errors_.empty() && !flew) {
      error(calls.empty() ? 1 : calls.front().source_line, SemanticErrorKind::EmptyMission,
            "script contains no flight command");
    }
  }

  std::map<std::string, const FunctionSpec*, std::less<>> by_name_;
  std::vector<SemanticError> errors_;
  std::vector<BoundCall> bound_out_;
};

}  // namespace

const char* to_string(SemanticErrorKind k) {
  switch (k) {
    case SemanticErrorKind::UnknownPrimitive: return "UnknownPrimitive";
    case SemanticErrorKind::BadArity: return "BadArity";
    case SemanticErrorKind::BadKind: return "BadKind";
    case SemanticErrorKind::RangeViolation: return "RangeViolation";
    case SemanticErrorKind::OrderingViolation: return "OrderingViolation";
    case SemanticErrorKind::ListLengthMismatch: return "ListLengthMismatch";
    case SemanticErrorKind::EmptyMission: return "EmptyMission";
  }
  return "?";
}

std::string SemanticError::to_string() const {
  return "line " + std::to_string(line) + ": " + message;
}

bool ValidatedMission::has_inserted_takeoff() const {
  return std::any_of(calls.begin(), calls.end(), [](const BoundCall& c) { return c.inserted; });
}

MissionScript ValidatedMission::to_script() const {
  MissionScript s;
  int line = 0;
  for (const auto& c : calls) {
    if (c.inserted) continue;
    s.calls.push_back(PrimitiveCall{c.name, c.args, {}, ++line});
  }
  s.source_text = render(s);
  return s;
}

ValidationResult validate(const MissionScript& script, const std::vector<FunctionSpec>& library) {
  return Validator(library).run(script);
}

PipelineResult interpret(std::string_view raw, const std::vector<FunctionSpec>& library) {
  PipelineResult out;
  Extracted extracted;
  try {
    extracted = extract_script(raw);
  } catch (const Error& e) {
    out.first_error = e.what();
    return out;
  }
  out.unfenced = extracted.unfenced;
  auto parsed = parse(extracted.text);
  if (!parsed.ok()) {
    out.first_error = "syntax error at " + parsed.errors.front().to_string();
    return out;
  }
  auto validated = validate(*parsed.script, library);
  if (!validated.ok()) {
    out.first_error = validated.errors.front().to_string();
    return out;
  }
  out.mission = std::move(validated.mission);
  return out;
}

}  // namespace fluc::mission
