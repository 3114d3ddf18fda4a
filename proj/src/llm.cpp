#include "fluc/llm.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace fluc::llm {

using nlohmann::json;

const char* const kFormatRule =
    "Reply with exactly one fenced code block containing only library calls, one call per line, "
    "and nothing else.";

namespace {

std::string describe(const mission::ParamSpec& p) {
  std::ostringstream os;
  os << p.name << ": " << mission::to_string(p.kind);
  if (!p.units.empty()) os << " [" << p.units << "]";
  if (p.min || p.max) {
    os << ", ";
    if (p.min && p.max) {
      os << (p.min_exclusive ? "(" : "[") << mission::render_number(*p.min) << ", "
         << mission::render_number(*p.max) << "]";
    } else if (p.min) {
      os << (p.min_exclusive ? "> " : ">= ") << mission::render_number(*p.min);
    } else {
      os << "<= " << mission::render_number(*p.max);
    }
  }
  return os.str();
}

}  // namespace

std::string request_digest(const std::vector<Message>& messages) {
  std::uint64_t h = 14695981039346656037ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h *= 1099511628211ULL;  // NUL separator
  };
  for (const auto& m : messages) {
    feed(m.role);
    feed(m.content);
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::int64_t approximate_tokens(std::string_view text) {
  std::int64_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

std::string build_init_prompt(const std::vector<mission::FunctionSpec>& library, std::string_view rules,
                              const geo::GeoPoint& home) {
  if (library.empty()) throw Error("OutOfRange", "function library is empty");
  std::ostringstream os;
  os << "You control a UAV through a fixed function library. Translate the operator's mission into calls "
        "to these functions.\n\n";
  os << "Home position: lat " << mission::render_number(home.lat) << ", lon " << mission::render_number(home.lon)
     << ". Altitudes are meters above the home ground level. Local coordinates are meters east, north and up "
        "of home.\n\n";
  os << "Functions:\n";
  for (const auto& f : library) {
    os << "- " << f.signature() << ": " << f.doc << "\n";
    for (const auto& p : f.params) os << "    " << describe(p) << "\n";
  }
  os << "\nRules:\n";
  os << "- " << kFormatRule << "\n";
  os << "- Use only the functions above. Keyword arguments use their parameter names.\n";
  os << "- Lists are written in square brackets, strings in double quotes.\n";
  if (!rules.empty()) {
    std::string extra(rules);
    if (extra.back() != '\n') extra.push_back('\n');
    os << extra;
  }
  return os.str();
}

std::string correction_message(std::string_view first_error) {
  std::string msg = "Your previous reply could not be executed: ";
  msg.append(first_error);
  msg += "\n";
  msg += kFormatRule;
  return msg;
}

const char* to_string(Termination t) {
  return t == Termination::Executable ? "Executable" : "AttemptsExhausted";
}

std::int64_t AttemptLog::completion_tokens() const {
  std::int64_t n = 0;
  for (const auto& e : exchanges) n += e.reply.completion_tokens;
  return n;
}

std::int64_t AttemptLog::prompt_tokens() const {
  std::int64_t n = 0;
  for (const auto& e : exchanges) n += e.reply.prompt_tokens;
  return n;
}

double AttemptLog::total_latency_s() const {
  double s = 0.0;
  for (const auto& e : exchanges) s += e.reply.latency_s;
  return s;
}

double AttemptLog::final_latency_s() const { return exchanges.empty() ? 0.0 : exchanges.back().reply.latency_s; }

AttemptLog correction_loop(Backend& backend, const std::string& init_prompt, const std::string& goal,
                           int max_attempts, const std::vector<mission::FunctionSpec>& library,
                           const AttemptObserver& observer) {
  if (max_attempts < 1) throw Error("OutOfRange", "max_attempts must be at least 1");
  AttemptLog log;
  std::vector<Message> messages{{"system", init_prompt}, {"user", goal}};
  for (int attempt = 1;; ++attempt) {
    log.prompts_used = attempt;
    Exchange ex{messages, backend.complete(messages), backend.model()};
    log.exchanges.push_back(ex);
    auto result = mission::interpret(ex.reply.text, library);
    if (observer) observer(ex, attempt, result.mission ? std::string() : result.first_error);
    if (result.mission) {
      log.final_mission = std::move(result.mission);
      log.termination = Termination::Executable;
      return log;
    }
    log.last_error = result.first_error;
    if (attempt == max_attempts) {
      log.termination = Termination::AttemptsExhausted;
      return log;
    }
    messages.push_back({"assistant", ex.reply.text});
    messages.push_back({"user", correction_message(result.first_error)});
  }
}

// ---------------------------------------------------------------------------
// Ollama

OllamaBackend::OllamaBackend(EndpointConfig config) : config_(std::move(config)) {
  if (!(config_.timeout_s > 0)) throw Error("OutOfRange", "timeout must be positive");
}

Completion OllamaBackend::complete(const std::vector<Message>& messages) {
  json body;
  body["model"] = config_.model;
  body["stream"] = false;
  body["messages"] = json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client cli(config_.url);
  const auto secs = std::chrono::duration<double>(config_.timeout_s);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);

  const auto t0 = std::chrono::steady_clock::now();
  auto res = cli.Post("/api/chat", body.dump(), "application/json");
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!res) throw Error("Transport", "chat endpoint " + config_.url + ": " + httplib::to_string(res.error()));

  if (res->status == 404 && res->body.find("not found") != std::string::npos)
    throw Error("ModelMissing", "model '" + config_.model + "' is not available at " + config_.url);
  if (res->status != 200)
    throw Error("Protocol", "chat endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);

  Completion c;
  c.latency_s = latency;
  try {
    const auto j = json::parse(res->body);
    c.text = j.at("message").at("content").get<std::string>();
    if (j.contains("eval_count")) {
      c.completion_tokens = j.at("eval_count").get<std::int64_t>();
    } else {
      c.completion_tokens = approximate_tokens(c.text);
      c.approximate = true;
    }
    if (j.contains("prompt_eval_count")) {
      c.prompt_tokens = j.at("prompt_eval_count").get<std::int64_t>();
    } else {
      for (const auto& m : messages) c.prompt_tokens += approximate_tokens(m.content);
      c.approximate = true;
    }
  } catch (const json::exception& e) {
    throw Error("Protocol", std::string("malformed chat response: ") + e.what());
  }
  if (c.completion_tokens < 0 || c.prompt_tokens < 0) throw Error("Protocol", "negative token count");
  return c;
}

// ---------------------------------------------------------------------------
// Fixtures

std::vector<FixtureEntry> parse_fixture(std::string_view json_text) {
  std::vector<FixtureEntry> out;
  try {
    const auto j = json::parse(json_text);
    if (!j.is_array()) throw Error("FixtureFormat", "fixture must be a JSON array");
    for (const auto& e : j) {
      FixtureEntry f;
      f.request_digest = e.value("request-digest", std::string());
      f.response_text = e.at("response-text").get<std::string>();
      f.prompt_tokens = e.at("prompt-tokens").get<std::int64_t>();
      f.completion_tokens = e.at("completion-tokens").get<std::int64_t>();
      f.latency_s = e.at("latency-s").get<double>();
      if (f.prompt_tokens < 0 || f.completion_tokens < 0 || !(f.latency_s >= 0))
        throw Error("FixtureFormat", "negative token count or latency");
      out.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw Error("FixtureFormat", std::string("malformed fixture: ") + e.what());
  }
  return out;
}

std::string fixture_json(const std::vector<FixtureEntry>& entries) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& f : entries) {
    nlohmann::ordered_json e;
    e["request-digest"] = f.request_digest;
    e["response-text"] = f.response_text;
    e["prompt-tokens"] = f.prompt_tokens;
    e["completion-tokens"] = f.completion_tokens;
    e["latency-s"] = f.latency_s;
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + "\n";
}

ReplayBackend::ReplayBackend(std::vector<FixtureEntry> entries, std::string model)
    : entries_(std::move(entries)), model_(std::move(model)) {}

std::unique_ptr<ReplayBackend> ReplayBackend::from_file(const std::filesystem::path& path, std::string model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FixtureFormat", "cannot open fixture " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::make_unique<ReplayBackend>(parse_fixture(ss.str()), std::move(model));
}

Completion ReplayBackend::complete(const std::vector<Message>& messages) {
  if (next_ >= entries_.size())
    throw Error("ExhaustedFixture", "fixture has no response left after " + std::to_string(entries_.size()));
  const FixtureEntry& f = entries_[next_];
  if (!f.request_digest.empty() && f.request_digest != request_digest(messages))
    throw Error("FixtureFormat", "request " + std::to_string(next_ + 1) + " does not match the recorded digest");
  ++next_;
  return {f.response_text, f.prompt_tokens, f.completion_tokens, false, f.latency_s};
}

Completion RecordingBackend::complete(const std::vector<Message>& messages) {
  Completion c = inner_.complete(messages);
  recorded_.push_back({request_digest(messages), c.text, c.prompt_tokens, c.completion_tokens, c.latency_s});
  return c;
}

void RecordingBackend::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  out << fixture_json(recorded_);
  if (!out) throw Error("Io", "cannot write fixture " + path.string());
}

}  // namespace fluc::llm
