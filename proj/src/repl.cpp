#include "fluc/repl.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

#include "fluc/sim.hpp"

namespace fluc::repl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void print_status(const orchestrator::Session& s, std::ostream& out) {
  const sim::VehicleState st = s.vehicle_state();
  out << "phase: " << sim::to_string(st.phase) << "\n"
      << "position: " << format_position(st.position) << "\n"
      << "model: " << s.model() << "\n"
      << "missions: " << s.outcomes().size() << "\n";
}

void print_trace(const orchestrator::Session& s, std::ostream& out) {
  const auto outcomes = s.outcomes();
  for (auto it = outcomes.rbegin(); it != outcomes.rend(); ++it) {
    if (it->trace) {
      out << sim::to_jsonl(*it->trace);
      return;
    }
  }
  out << "no trace yet\n";
}

void print_outcome(const orchestrator::MissionOutcome& o, const orchestrator::Session& s, std::ostream& out) {
  out << "prompts used: " << o.attempts.prompts_used << "\n";
  // Without a scenario goal the only available check is a clean run.
  out << "label: " << orchestrator::to_string(orchestrator::classify(o, o.succeeded())) << "\n";
  if (!o.succeeded()) {
    out << "failed at " << o.failure_stage << ": " << o.failure_kind;
    if (o.failure_line > 0) out << " (line " << o.failure_line << ")";
    if (!o.failure.empty()) out << ": " << o.failure;
    out << "\n";
  }
  out << "position: " << format_position(s.vehicle_state().position) << "\n";
}

}  // namespace

std::string format_position(const geo::EnuPoint& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "E %.2f N %.2f U %.2f m", p.east, p.north, p.up);
  return buf;
}

int run(orchestrator::Session& session, std::istream& in, std::ostream& out, bool show_prompt) {
  int handled = 0;
  std::string line;
  while (true) {
    if (show_prompt) out << "fluc> " << std::flush;
    if (!std::getline(in, line)) break;
    const std::string cmd = trim(line);
    if (cmd.empty()) continue;
    if (cmd == ":quit" || cmd == ":q") break;
    if (cmd == ":status") {
      print_status(session, out);
    } else if (cmd == ":trace") {
      print_trace(session, out);
    } else if (cmd == ":help") {
      out << ":status  vehicle phase and position\n"
             ":trace   telemetry of the last flown mission (JSONL)\n"
             ":model <id>  use another model for the next prompt\n"
             ":quit    leave\n";
    } else if (cmd.rfind(":model", 0) == 0) {
      const std::string id = trim(cmd.substr(6));
      if (id.empty()) {
        out << "model: " << session.model() << "\n";
      } else if (session.set_model(id)) {
        out << "model: " << id << "\n";
      } else {
        out << "cannot switch model while a mission is running\n";
      }
    } else if (cmd[0] == ':') {
      out << "unknown command " << cmd << " (try :help)\n";
    } else {
      const auto o = orchestrator::handle_prompt(session, cmd);
      print_outcome(o, session, out);
      ++handled;
    }
  }
  out << std::flush;
  return handled;
}

}  // namespace fluc::repl
