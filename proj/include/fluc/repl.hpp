#pragma once

#include <iosfwd>

#include "fluc/orchestrator.hpp"

namespace fluc::repl {

/// Line loop over one session until ":quit" or end of input. Meta commands
/// (:status, :trace, :model <id>, :help, :quit) are answered locally, any other
/// non-empty line goes through handle_prompt. Outcome failures are reported and
/// the loop carries on. Returns the number of prompts handled.
int run(orchestrator::Session& session, std::istream& in, std::ostream& out, bool show_prompt = true);

std::string format_position(const geo::EnuPoint& p);

}  // namespace fluc::repl
