#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluc/error.hpp"
#include "fluc/geodesy.hpp"
#include "fluc/mission.hpp"

namespace fluc::llm {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;

  bool operator==(const Message&) const = default;
};

struct Completion {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  bool approximate = false;  // counts estimated from whitespace, not reported by the endpoint
  double latency_s = 0.0;

  bool operator==(const Completion&) const = default;
};

struct Exchange {
  std::vector<Message> sent;
  Completion reply;
  std::string model;

  bool operator==(const Exchange&) const = default;
};

class Backend {
 public:
  virtual ~Backend() = default;
  /// Full, non-streamed reply to the conversation so far.
  virtual Completion complete(const std::vector<Message>& messages) = 0;
  virtual std::string model() const = 0;
};

struct EndpointConfig {
  std::string url = "http://127.0.0.1:11434";
  std::string model = "gemma2:9b";
  double timeout_s = 300.0;
};

/// Ollama-style POST /api/chat. Errors: Transport, Protocol, ModelMissing.
class OllamaBackend : public Backend {
 public:
  explicit OllamaBackend(EndpointConfig config);
  Completion complete(const std::vector<Message>& messages) override;
  std::string model() const override { return config_.model; }
  void set_model(std::string model) { config_.model = std::move(model); }

 private:
  EndpointConfig config_;
};

struct FixtureEntry {
  std::string request_digest;  // empty: not checked
  std::string response_text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_s = 0.0;

  bool operator==(const FixtureEntry&) const = default;
};

/// Throws Error{"FixtureFormat"}.
std::vector<FixtureEntry> parse_fixture(std::string_view json_text);
std::string fixture_json(const std::vector<FixtureEntry>& entries);

/// Serves recorded responses in order, then throws Error{"ExhaustedFixture"}.
/// A recorded non-empty digest must match the conversation being sent.
class ReplayBackend : public Backend {
 public:
  ReplayBackend(std::vector<FixtureEntry> entries, std::string model);
  static std::unique_ptr<ReplayBackend> from_file(const std::filesystem::path& path, std::string model);

  Completion complete(const std::vector<Message>& messages) override;
  std::string model() const override { return model_; }
  std::size_t remaining() const { return entries_.size() - next_; }

 private:
  std::vector<FixtureEntry> entries_;
  std::size_t next_ = 0;
  std::string model_;
};

/// Passes calls through to `inner` and keeps a fixture of everything seen.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}
  Completion complete(const std::vector<Message>& messages) override;
  std::string model() const override { return inner_.model(); }
  const std::vector<FixtureEntry>& recorded() const { return recorded_; }
  void save(const std::filesystem::path& path) const;

 private:
  Backend& inner_;
  std::vector<FixtureEntry> recorded_;
};

/// FNV-1a 64 over roles and contents, as 16 hex digits.
std::string request_digest(const std::vector<Message>& messages);
std::int64_t approximate_tokens(std::string_view text);

extern const char* const kFormatRule;

std::string build_init_prompt(const std::vector<mission::FunctionSpec>& library, std::string_view rules,
                              const geo::GeoPoint& home);
std::string correction_message(std::string_view first_error);

enum class Termination { Executable, AttemptsExhausted };

const char* to_string(Termination t);

struct AttemptLog {
  std::vector<Exchange> exchanges;
  int prompts_used = 0;
  std::optional<mission::ValidatedMission> final_mission;
  std::string last_error;  // first error of the last rejected reply
  Termination termination = Termination::AttemptsExhausted;

  std::int64_t completion_tokens() const;
  std::int64_t prompt_tokens() const;
  double total_latency_s() const;
  double final_latency_s() const;
};

inline constexpr int kDefaultMaxAttempts = 5;

/// Called after every exchange; `error` is empty when the reply validated.
using AttemptObserver = std::function<void(const Exchange& exchange, int attempt, const std::string& error)>;

/// Attempt 1 sends the init prompt and the goal; every rejected reply is
/// answered with a correction quoting its first error. Stops at the first reply
/// that validates or after max_attempts user messages. Backend errors propagate.
AttemptLog correction_loop(Backend& backend, const std::string& init_prompt, const std::string& goal,
                           int max_attempts = kDefaultMaxAttempts,
                           const std::vector<mission::FunctionSpec>& library = mission::default_library(),
                           const AttemptObserver& observer = {});

}  // namespace fluc::llm
