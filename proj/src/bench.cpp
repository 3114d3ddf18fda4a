#include "fluc/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"

namespace fluc::bench {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const geo::GeoPoint kScenario1Target{41.1783107, -8.591609, 17.0};
constexpr double kHorizontalTolM = 2.0;
constexpr double kVerticalTolM = 1.0;
constexpr double kPlaceTolM = 10.0;
constexpr double kSampleStepM = 0.5;

bool reached(const MissionOutcome& o, const geo::EnuPoint& target) {
  if (!o.trace || o.trace->samples.empty()) return false;
  const geo::EnuPoint end = o.trace->samples.back().position;
  return geo::horizontal_m(end, target) <= kHorizontalTolM && std::abs(end.up - target.up) <= kVerticalTolM;
}

// Shortest open path from start through every point, by enumeration.
double brute_force_optimum(const geo::EnuPoint& start, const std::vector<geo::EnuPoint>& pts) {
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  double best = INFINITY;
  do {
    double len = 0.0;
    geo::EnuPoint at = start;
    for (std::size_t i : idx) {
      len += geo::euclid3_m(at, pts[i]);
      at = pts[i];
    }
    best = std::min(best, len);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace

const std::vector<geo::EnuPoint>& scenario4_waypoints() {
  static const std::vector<geo::EnuPoint> w{{0, 100, 10}, {100, 100, 10}, {100, 0, 10}, {0, 0, 10}, {50, 50, 20}};
  return w;
}

planner::Obstacle scenario5_obstacle() { return {50, 0, 10, 50}; }
geo::EnuPoint scenario5_target() { return {100, 0, 10}; }

bool coords_oracle(const MissionOutcome& o, const OracleContext& ctx) {
  return reached(o, geo::enu_from_geo(ctx.home, kScenario1Target));
}

bool place_oracle(const MissionOutcome& o, const OracleContext& ctx) {
  if (!o.trace || o.trace->samples.empty()) return false;
  for (const auto& [name, place] : ctx.places) {
    if (places::normalize_key(name) != "feup") continue;
    const geo::EnuPoint target = geo::enu_from_geo(ctx.home, place.point);
    return geo::horizontal_m(o.trace->samples.back().position, target) <= kPlaceTolM;
  }
  return false;
}

bool diagonal_oracle(const MissionOutcome& o, const OracleContext&) {
  if (!o.trace || o.trace->samples.empty()) return false;
  const geo::EnuPoint start = o.trace->samples.front().position;
  for (const auto& s : o.trace->samples) {
    const geo::EnuPoint d = s.position - start;
    if (std::abs(d.east - d.north) > 1.0) return false;
  }
  const geo::EnuPoint d = o.trace->samples.back().position - start;
  return std::abs(std::hypot(d.east, d.north) - 200.0) <= 1.0;
}

bool waypoints_oracle(const MissionOutcome& o, const OracleContext&) {
  if (!o.trace || o.trace->samples.empty() || !o.compiled || o.items.empty()) return false;
  geo::EnuPoint start = o.trace->samples.front().position;
  std::vector<geo::EnuPoint> route;
  for (const auto& it : o.items) {
    if (it.kind == sim::ItemKind::Takeoff && route.empty()) start = it.target;
    if (it.kind == sim::ItemKind::Waypoint) route.push_back(it.target);
  }
  const auto& wanted = scenario4_waypoints();
  for (const auto& w : wanted) {
    const bool visited =
        std::any_of(route.begin(), route.end(), [&](const geo::EnuPoint& p) { return geo::euclid3_m(p, w) <= 1e-6; });
    if (!visited) return false;
  }
  double length = 0.0;
  geo::EnuPoint at = start;
  for (const auto& p : route) {
    length += geo::euclid3_m(at, p);
    at = p;
  }
  return length <= brute_force_optimum(start, wanted) + 1e-6 && reached(o, route.back());
}

bool obstacle_oracle(const MissionOutcome& o, const OracleContext&) {
  if (!o.trace || o.trace->samples.empty()) return false;
  const planner::Obstacle ob = scenario5_obstacle();
  const auto inside = [&](const geo::EnuPoint& p) {
    return std::hypot(p.east - ob.center_east, p.north - ob.center_north) < ob.radius && p.up < ob.height;
  };
  const auto& samples = o.trace->samples;
  if (inside(samples.front().position)) return false;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const geo::EnuPoint a = samples[i - 1].position, b = samples[i].position;
    const int steps = std::max(1, static_cast<int>(std::ceil(geo::euclid3_m(a, b) / kSampleStepM)));
    for (int k = 1; k <= steps; ++k) {
      const double f = static_cast<double>(k) / steps;
      if (inside({a.east + f * (b.east - a.east), a.north + f * (b.north - a.north), a.up + f * (b.up - a.up)})) {
        return false;
      }
    }
  }
  return reached(o, scenario5_target());
}

bool supply_oracle(const MissionOutcome& o, const OracleContext&) {
  if (!o.trace || o.trace->samples.empty()) return false;
  static const std::vector<supply::GroundUser> gus{{25, 50, 0, 200}, {50, 50, 0, 200}};
  return supply::all_satisfied(supply::qos_report(o.trace->samples.back().position, gus));
}

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> all{
      {"1", "Go to 41.1783107 -8.591609 17", coords_oracle},
      {"2", "Go to FEUP", place_oracle},
      {"3", "Fly in a straight diagonal line for 200 meters", diagonal_oracle},
      {"4",
       "Fly through the waypoints (0,100,10), (100,100,10), (100,0,10), (0,0,10) and (50,50,20), given as meters "
       "east, north and up from home, along the most efficient path.",
       waypoints_oracle},
      {"5",
       "A building 10 m in radius and 50 m tall stands 50 m east of home. Take off to 10 m and fly 100 m east "
       "without hitting it.",
       obstacle_oracle},
      {"supply",
       "Upload and start the mission for a UAV with 2 GUs, whose x are [25,50], y are [50,50], z are [0,0], and "
       "traffic [200,200].",
       supply_oracle},
  };
  return all;
}

const Scenario& scenario(const std::string& id) {
  for (const auto& s : scenarios()) {
    if (s.id == id) return s;
  }
  throw Error("UnknownScenario", "unknown scenario '" + id + "' (expected 1-5 or supply)");
}

BenchRecord record_of(const std::string& scenario_id, int run, const MissionOutcome& o, bool oracle_pass) {
  BenchRecord r;
  r.scenario = scenario_id;
  r.model = o.model;
  r.run = run;
  r.tokens = o.attempts.completion_tokens();
  r.prompt_tokens = o.attempts.prompt_tokens();
  r.seconds = o.attempts.total_latency_s();
  r.final_seconds = o.attempts.final_latency_s();
  r.prompts = o.attempts.prompts_used;
  r.label = orchestrator::classify(o, oracle_pass);
  return r;
}

// ---------------------------------------------------------------------------
// Statistics

double t_quantile_975(std::size_t df) {
  static constexpr std::array<double, 30> table{
      12.706204736174705, 4.3026527297494639, 3.1824463052837096, 2.7764451051977944, 2.5705818356363155,
      2.44691185114497, 2.3646242515927853, 2.3060041352041667, 2.2621571627982055, 2.2281388519862747,
      2.2009851600916399, 2.1788128296672289, 2.1603686564627925, 2.1447866879178038, 2.1314495455597757,
      2.1199052992212547, 2.1098155778333171, 2.1009220402410385, 2.0930240544083098, 2.0859634472658648,
      2.0796138447276804, 2.0738730679040262, 2.0686576104190487, 2.0638985616280258, 2.0595385527532977,
      2.0555294386428732, 2.0518305164802856, 2.0484071417952452, 2.0452296421327043, 2.0422724563012383,
  };
  if (df == 0) throw Error("TooFew", "t quantile needs at least one degree of freedom");
  if (df <= table.size()) return table[df - 1];
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054;
  const double v = static_cast<double>(df);
  const double z3 = z * z * z, z5 = z3 * z * z, z7 = z5 * z * z, z9 = z7 * z * z;
  return z + (z3 + z) / (4 * v) + (5 * z5 + 16 * z3 + 3 * z) / (96 * v * v) +
         (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / (384 * v * v * v) +
         (79 * z9 + 776 * z7 + 1482 * z5 - 1920 * z3 - 945 * z) / (92160 * v * v * v * v);
}

Aggregate aggregate(const std::vector<double>& values) {
  if (values.size() < 2) throw Error("TooFew", "a confidence interval needs at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double s = std::sqrt(ss / (n - 1));
  return {mean, t_quantile_975(values.size() - 1) * s / std::sqrt(n), values.size()};
}

// ---------------------------------------------------------------------------
// Running

std::vector<BenchRecord> run_scenario(const Scenario& s, const RunConfig& config, std::vector<MissionOutcome>* outcomes) {
  if (config.reps < 1) throw Error("OutOfRange", "repetitions must be at least 1");
  const bool replay = !config.fixtures.empty();

  std::vector<std::filesystem::path> files;
  if (replay) {
    const auto dir = config.fixtures / s.id;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (files.empty()) throw Error("Io", "no fixtures under " + dir.string());
    std::sort(files.begin(), files.end());
  }

  Config base = config.base;
  if (!config.model.empty()) base.endpoint.model = config.model;
  if (replay) {
    base.offline_places = true;
    base.geocache.clear();
  }
  orchestrator::SessionManager manager(base);
  OracleContext ctx{base.home, {}};
  if (!base.place_fixtures.empty()) ctx.places = places::load_place_fixtures(base.place_fixtures);

  std::vector<BenchRecord> records;
  for (int i = 0; i < config.reps; ++i) {
    Config c = base;
    c.replay_fixture = replay ? files[static_cast<std::size_t>(i) % files.size()] : std::filesystem::path{};
    auto& session = manager.create(c);
    const MissionOutcome o = orchestrator::handle_prompt(session, s.prompt);
    if (!replay && o.failure_kind == "Transport") throw Error("Transport", o.failure);
    records.push_back(record_of(s.id, i + 1, o, s.oracle(o, ctx)));
    if (outcomes) outcomes->push_back(o);
  }
  return records;
}

// ---------------------------------------------------------------------------
// Reports

void sort_records(std::vector<BenchRecord>& records) {
  const auto rank = [](const std::string& id) {
    const auto& all = scenarios();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].id == id) return i;
    }
    return all.size();
  };
  std::stable_sort(records.begin(), records.end(), [&](const BenchRecord& a, const BenchRecord& b) {
    return std::make_tuple(rank(a.scenario), a.scenario, a.model, a.run) <
           std::make_tuple(rank(b.scenario), b.scenario, b.model, b.run);
  });
}

std::string classification_line(const std::vector<BenchRecord>& records) {
  int s = 0, p = 0, u = 0;
  for (const auto& r : records) {
    s += r.label == Label::Successful;
    p += r.label == Label::PartiallyCorrect;
    u += r.label == Label::Unsuccessful;
  }
  return std::to_string(s) + " / " + std::to_string(p) + " / " + std::to_string(u);
}

std::string to_csv(std::vector<BenchRecord> records) {
  sort_records(records);
  std::string out = "scenario,model,run,tokens,seconds,prompts,label\n";
  char secs[64];
  for (const auto& r : records) {
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    out += r.scenario + "," + r.model + "," + std::to_string(r.run) + "," + std::to_string(r.tokens) + "," + secs +
           "," + std::to_string(r.prompts) + "," + orchestrator::to_string(r.label) + "\n";
  }
  return out;
}

namespace {

ordered_json stat_json(const std::vector<double>& xs) {
  ordered_json j;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    const Aggregate a = aggregate(xs);
    j["mean"] = a.mean;
    j["half_width"] = a.half_width;
  } else {
    j["mean"] = mean;
    j["half_width"] = nullptr;
  }
  return j;
}

}  // namespace

std::string to_report_json(std::vector<BenchRecord> records) {
  sort_records(records);
  ordered_json j;
  j["schema"] = kReportSchema;
  j["records"] = ordered_json::array();
  for (const auto& r : records) {
    ordered_json e;
    e["scenario"] = r.scenario;
    e["model"] = r.model;
    e["run"] = r.run;
    e["tokens"] = r.tokens;
    e["prompt_tokens"] = r.prompt_tokens;
    e["seconds"] = r.seconds;
    e["final_seconds"] = r.final_seconds;
    e["prompts"] = r.prompts;
    e["label"] = orchestrator::to_string(r.label);
    j["records"].push_back(e);
  }
  j["summary"] = ordered_json::array();
  for (std::size_t i = 0; i < records.size();) {
    std::size_t k = i;
    std::vector<BenchRecord> group;
    while (k < records.size() && records[k].scenario == records[i].scenario && records[k].model == records[i].model) {
      group.push_back(records[k++]);
    }
    std::vector<double> tokens, prompt_tokens, seconds, final_seconds, prompts;
    for (const auto& r : group) {
      tokens.push_back(static_cast<double>(r.tokens));
      prompt_tokens.push_back(static_cast<double>(r.prompt_tokens));
      seconds.push_back(r.seconds);
      final_seconds.push_back(r.final_seconds);
      prompts.push_back(r.prompts);
    }
    ordered_json g;
    g["scenario"] = records[i].scenario;
    g["model"] = records[i].model;
    g["n"] = group.size();
    g["tokens"] = stat_json(tokens);
    g["prompt_tokens"] = stat_json(prompt_tokens);
    g["seconds"] = stat_json(seconds);
    g["final_seconds"] = stat_json(final_seconds);
    g["prompts"] = stat_json(prompts);
    g["classification"] = classification_line(group);
    j["summary"].push_back(g);
    i = k;
  }
  return j.dump(2) + "\n";
}

std::vector<BenchRecord> records_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema") != kReportSchema) throw Error("Io", "unsupported report schema");
    std::vector<BenchRecord> out;
    for (const json& e : j.at("records")) {
      BenchRecord r;
      r.scenario = e.at("scenario").get<std::string>();
      r.model = e.at("model").get<std::string>();
      r.run = e.at("run").get<int>();
      r.tokens = e.at("tokens").get<std::int64_t>();
      r.prompt_tokens = e.at("prompt_tokens").get<std::int64_t>();
      r.seconds = e.at("seconds").get<double>();
      r.final_seconds = e.at("final_seconds").get<double>();
      r.prompts = e.at("prompts").get<int>();
      const auto label = orchestrator::label_from_string(e.at("label").get<std::string>());
      if (!label) throw Error("Io", "unknown label in report");
      r.label = *label;
      out.push_back(std::move(r));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error("Io", std::string("malformed report: ") + e.what());
  }
}

void write_report(const std::vector<BenchRecord>& records, const std::filesystem::path& path) {
  if (records.empty()) throw Error("Io", "no records to write");
  const auto ext = path.extension().string();
  std::string body;
  if (ext == ".csv") {
    body = to_csv(records);
  } else if (ext == ".json") {
    body = to_report_json(records);
  } else {
    throw Error("Io", "report must end in .csv or .json: " + path.string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("Io", "cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) throw Error("Io", "cannot write " + path.string());
}

}  // namespace fluc::bench
