#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fluc/config.hpp"
#include "fluc/geolocation.hpp"
#include "fluc/orchestrator.hpp"

namespace fluc::bench {

using orchestrator::Label;
using orchestrator::MissionOutcome;

struct OracleContext {
  geo::GeoPoint home;
  std::map<std::string, places::PlaceResult> places;  // keyed as in the place fixture file
};

using Oracle = std::function<bool(const MissionOutcome&, const OracleContext&)>;

struct Scenario {
  std::string id;  // "1".."5" or "supply"
  std::string prompt;
  Oracle oracle;
};

/// The registry in report order: 1, 2, 3, 4, 5, supply.
const std::vector<Scenario>& scenarios();
/// Throws Error{"UnknownScenario"}.
const Scenario& scenario(const std::string& id);

// Goal checks over a finished outcome's trace.
bool coords_oracle(const MissionOutcome& o, const OracleContext& ctx);
bool place_oracle(const MissionOutcome& o, const OracleContext& ctx);
bool diagonal_oracle(const MissionOutcome& o, const OracleContext& ctx);
bool waypoints_oracle(const MissionOutcome& o, const OracleContext& ctx);
bool obstacle_oracle(const MissionOutcome& o, const OracleContext& ctx);
bool supply_oracle(const MissionOutcome& o, const OracleContext& ctx);

/// Scenario-4 waypoints and scenario-5 obstacle as stated in their prompts.
const std::vector<geo::EnuPoint>& scenario4_waypoints();
planner::Obstacle scenario5_obstacle();
geo::EnuPoint scenario5_target();

struct BenchRecord {
  std::string scenario;
  std::string model;
  int run = 0;                      // 1-based
  std::int64_t tokens = 0;          // completion tokens over all attempts
  std::int64_t prompt_tokens = 0;
  double seconds = 0.0;             // generation latency over all attempts
  double final_seconds = 0.0;       // latency of the last attempt only
  int prompts = 0;
  Label label = Label::Unsuccessful;

  bool operator==(const BenchRecord&) const = default;
};

BenchRecord record_of(const std::string& scenario_id, int run, const MissionOutcome& o, bool oracle_pass);

struct Aggregate {
  double mean = 0.0;
  double half_width = 0.0;  // 95 % confidence interval
  std::size_t n = 0;
};

/// Two-sided 97.5 % Student-t quantile; exact table for df 1-30, series expansion above.
double t_quantile_975(std::size_t df);
/// Throws Error{"TooFew"} for fewer than two values.
Aggregate aggregate(const std::vector<double>& values);

struct RunConfig {
  Config base;
  std::string model;
  int reps = 10;
  /// Fixture mode when set: run i replays the i-th (mod count) *.json file of
  /// <fixtures>/<scenario id>/ in name order. Otherwise the live endpoint is used.
  std::filesystem::path fixtures;
};

/// Fresh session per run, runs in sequence. Live mode rethrows Transport
/// failures; fixture mode never throws past a missing fixture directory.
std::vector<BenchRecord> run_scenario(const Scenario& s, const RunConfig& config,
                                      std::vector<MissionOutcome>* outcomes = nullptr);

/// Sorted by (registry order, model, run).
void sort_records(std::vector<BenchRecord>& records);
/// "S / P / U" counts.
std::string classification_line(const std::vector<BenchRecord>& records);

std::string to_csv(std::vector<BenchRecord> records);
std::string to_report_json(std::vector<BenchRecord> records);
/// Throws Error{"Io"} on schema mismatch or malformed input.
std::vector<BenchRecord> records_from_json(std::string_view text);
/// Format from the extension (.csv or .json). Throws Error{"Io"}.
void write_report(const std::vector<BenchRecord>& records, const std::filesystem::path& path);

inline constexpr const char* kReportSchema = "fluc-bench-report/1";

}  // namespace fluc::bench
