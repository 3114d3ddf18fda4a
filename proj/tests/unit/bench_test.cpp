#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fluc/bench.hpp"
#include "json.hpp"
#include "scripted_backend.hpp"
#include "stub_server.hpp"

using namespace fluc;
using namespace fluc::bench;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(FLUC_FIXTURE_DIR);
const fs::path kTranscripts = kFixtures / "transcripts";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig fixture_run(int reps = 10) {
  RunConfig rc;
  rc.base = testing_support::offline_config();
  rc.model = "gemma2:9b";
  rc.reps = reps;
  rc.fixtures = kTranscripts;
  return rc;
}

std::vector<BenchRecord> run_all(const RunConfig& rc) {
  std::vector<BenchRecord> all;
  for (const auto& s : scenarios()) {
    const auto r = run_scenario(s, rc);
    all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

// Independent half-width: sample variance by the textbook two-pass formula and
// the Student-t quantile from Boost.Math.
double oracle_half_width(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  double sum = 0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  boost::math::students_t dist(n - 1);
  return boost::math::quantile(dist, 0.975) * std::sqrt(ss / (n - 1)) / std::sqrt(n);
}

}  // namespace

TEST(Aggregate, HandComputedExamples) {
  const Aggregate a = aggregate({1, 2, 3});
  EXPECT_NEAR(a.mean, 2.0, 1e-12);
  EXPECT_NEAR(a.half_width, 2.484, 0.001);
  EXPECT_NEAR(a.half_width, 4.3026527297494639 / std::sqrt(3.0), 1e-12);
  EXPECT_EQ(a.n, 3u);
  const Aggregate z = aggregate({5, 5, 5, 5});
  EXPECT_EQ(z.mean, 5.0);
  EXPECT_EQ(z.half_width, 0.0);
  for (const std::vector<double>& few : {std::vector<double>{}, std::vector<double>{1.0}}) {
    try {
      aggregate(few);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), "TooFew");
    }
  }
}

TEST(AggregateProperty, MatchesIndependentOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> value(0.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> xs(static_cast<std::size_t>(size(rng)));
    for (auto& x : xs) x = value(rng);
    const Aggregate a = aggregate(xs);
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    EXPECT_NEAR(a.mean, mean, 1e-9);
    EXPECT_NEAR(a.half_width, oracle_half_width(xs), 1e-9) << "n=" << xs.size();
    EXPECT_GE(a.half_width, 0.0);
  }
}

TEST(TQuantile, TableAndExpansionAgreeWithBoost) {
  for (std::size_t df = 1; df <= 200; ++df) {
    const double exact = boost::math::quantile(boost::math::students_t(static_cast<double>(df)), 0.975);
    EXPECT_NEAR(t_quantile_975(df), exact, df <= 30 ? 1e-12 : 1e-6) << df;
  }
}

TEST(Scenarios, RegistryAndVerbatimPrompts) {
  ASSERT_EQ(scenarios().size(), 6u);
  EXPECT_EQ(scenario("1").prompt, "Go to 41.1783107 -8.591609 17");
  EXPECT_EQ(scenario("2").prompt, "Go to FEUP");
  EXPECT_EQ(scenario("3").prompt, "Fly in a straight diagonal line for 200 meters");
  EXPECT_EQ(scenario("supply").prompt,
            "Upload and start the mission for a UAV with 2 GUs, whose x are [25,50], y are [50,50], z are [0,0], "
            "and traffic [200,200].");
  try {
    scenario("6");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "UnknownScenario");
  }
}

TEST(RunScenario, AllSuccessSetRendersTenZeroZero) {
  const auto records = run_scenario(scenario("1"), fixture_run());
  ASSERT_EQ(records.size(), 10u);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(records[i].run, i + 1);
    EXPECT_EQ(records[i].prompts, 1);
    EXPECT_EQ(records[i].label, Label::Successful);
    EXPECT_EQ(records[i].model, "gemma2:9b");
  }
  EXPECT_EQ(classification_line(records), "10 / 0 / 0");
}

TEST(RunScenario, LabelsPerFixtureSet) {
  const std::map<std::string, std::string> expected{
      {"1", "10 / 0 / 0"}, {"2", "7 / 3 / 0"}, {"3", "6 / 3 / 1"},
      {"4", "5 / 4 / 1"},  {"5", "6 / 4 / 0"}, {"supply", "8 / 2 / 0"},
  };
  for (const auto& s : scenarios()) {
    const auto records = run_scenario(s, fixture_run());
    EXPECT_EQ(classification_line(records), expected.at(s.id)) << "scenario " << s.id;
    for (const auto& r : records) {
      EXPECT_GE(r.prompts, 1);
      EXPECT_LE(r.prompts, llm::kDefaultMaxAttempts);
    }
  }
}

TEST(RunScenario, RepetitionsWrapAroundFixtures) {
  const auto records = run_scenario(scenario("3"), fixture_run(13));
  ASSERT_EQ(records.size(), 13u);
  EXPECT_EQ(records[10].tokens, records[0].tokens);
  EXPECT_EQ(records[12].label, records[2].label);
  EXPECT_THROW(run_scenario(scenario("3"), fixture_run(0)), Error);
}

TEST(RunScenario, ConstantCountsGiveZeroWidth) {
  const fs::path dir = fs::temp_directory_path() / "fluc_bench_const";
  fs::remove_all(dir);
  fs::create_directories(dir / "1");
  for (int i = 0; i < 3; ++i) {
    std::ofstream(dir / "1" / ("run-" + std::to_string(i) + ".json"))
        << llm::fixture_json({{"", "```\ngo_to_real_world_coords(41.1783107, -8.591609, 17)\n```", 300, 45, 2.0}});
  }
  RunConfig rc = fixture_run(10);
  rc.fixtures = dir;
  const auto records = run_scenario(scenario("1"), rc);
  std::vector<double> tokens;
  for (const auto& r : records) tokens.push_back(static_cast<double>(r.tokens));
  const Aggregate a = aggregate(tokens);
  EXPECT_EQ(a.mean, 45.0);
  EXPECT_EQ(a.half_width, 0.0);
  fs::remove_all(dir);
}

TEST(RunScenario, MissingFixturesIsIo) {
  RunConfig rc = fixture_run();
  rc.fixtures = "/nonexistent/fixtures";
  try {
    run_scenario(scenario("1"), rc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "Io");
  }
}

TEST(PromptsUsed, EqualsEngineeredAttemptCount) {
  for (int k : {1, 2, 3, 5}) {
    Config c = testing_support::offline_config();
    c.replay_fixture = kTranscripts / "attempts" / ("valid-on-" + std::to_string(k) + ".json");
    orchestrator::SessionManager m(c);
    auto& s = m.create();
    const auto o = orchestrator::handle_prompt(s, scenario("1").prompt);
    EXPECT_EQ(o.attempts.prompts_used, k);
    const BenchRecord r = record_of("1", 1, o, scenario("1").oracle(o, {c.home, {}}));
    EXPECT_EQ(r.prompts, k);
    EXPECT_EQ(r.label, k == 1 ? Label::Successful : Label::PartiallyCorrect);
  }
}

TEST(LiveMode, SecondsTrackEndpointLatency) {
  oracle::StubServer stub;
  stub.server().Post("/api/chat", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    nlohmann::json body{{"message", {{"role", "assistant"},
                                     {"content", "```\ngo_to_real_world_coords(41.1783107, -8.591609, 17)\n```"}}},
                        {"prompt_eval_count", 700},
                        {"eval_count", 30}};
    res.set_content(body.dump(), "application/json");
  });
  stub.start();
  RunConfig rc = fixture_run(2);
  rc.fixtures.clear();
  rc.base.endpoint.url = stub.url();
  const auto records = run_scenario(scenario("1"), rc);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_GE(r.seconds, 0.5);
    EXPECT_LT(r.seconds, 0.9);
    EXPECT_EQ(r.tokens, 30);
    EXPECT_EQ(r.label, Label::Successful);
  }
}

TEST(LiveMode, TransportPropagates) {
  RunConfig rc = fixture_run(1);
  rc.fixtures.clear();
  rc.base.endpoint.url = "http://127.0.0.1:" + std::to_string(oracle::closed_port());
  rc.base.endpoint.timeout_s = 2;
  try {
    run_scenario(scenario("1"), rc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "Transport");
  }
}

TEST(Oracles, CanonicalAndWrongFlights) {
  const auto fly = [](const std::string& script) {
    orchestrator::SessionManager m(testing_support::offline_config(),
                                   testing_support::scripted({testing_support::fenced(script)}));
    return orchestrator::handle_prompt(m.create(), "x");
  };
  const OracleContext ctx{testing_support::offline_config().home,
                          places::load_place_fixtures(kFixtures / "places" / "places.json")};
  EXPECT_TRUE(coords_oracle(fly("go_to_real_world_coords(41.1783107, -8.591609, 17)"), ctx));
  EXPECT_FALSE(coords_oracle(fly("go_to_real_world_coords(41.1783107, -8.591609, 30)"), ctx));
  EXPECT_TRUE(place_oracle(fly("go_to_place(\"FEUP\")"), ctx));
  EXPECT_FALSE(place_oracle(fly("go_to_place(\"FEUP\")"), {ctx.home, {}}));
  EXPECT_TRUE(diagonal_oracle(fly("takeoff(20)\nmove_relative(141.4214, 141.4214, 0)"), ctx));
  EXPECT_FALSE(diagonal_oracle(fly("takeoff(20)\nmove_relative(150, 130, 0)"), ctx));
  EXPECT_FALSE(diagonal_oracle(fly("takeoff(20)\nmove_relative(100, 100, 0)"), ctx));
  const std::string wps = "[0,100,10, 100,100,10, 100,0,10, 0,0,10, 50,50,20]";
  EXPECT_TRUE(waypoints_oracle(fly("takeoff(10)\nfly_waypoints(" + wps + ", 1)"), ctx));
  EXPECT_FALSE(waypoints_oracle(fly("takeoff(10)\nfly_waypoints(" + wps + ", 0)"), ctx));
  EXPECT_FALSE(waypoints_oracle(fly("takeoff(10)\nfly_waypoints([0,100,10, 100,100,10], 1)"), ctx));
  EXPECT_TRUE(obstacle_oracle(fly("set_obstacle(50, 0, 10, 50)\ntakeoff(10)\nmove_relative(100, 0, 0)"), ctx));
  EXPECT_FALSE(obstacle_oracle(fly("takeoff(10)\nmove_relative(100, 0, 0)"), ctx));
  EXPECT_FALSE(obstacle_oracle(fly("set_obstacle(50, 0, 10, 50)\ntakeoff(10)\nmove_relative(90, 0, 0)"), ctx));
  EXPECT_TRUE(supply_oracle(
      fly("upload_and_start_supply_mission(x=[25,50], y=[50,50], z=[0,0], traffic=[200,200])"), ctx));
  EXPECT_FALSE(supply_oracle(
      fly("upload_and_start_supply_mission(x=[250,500], y=[500,500], z=[0,0], traffic=[200,200])"), ctx));
  orchestrator::MissionOutcome empty;
  for (const auto& s : scenarios()) EXPECT_FALSE(s.oracle(empty, ctx)) << s.id;
}

TEST(Reports, GoldenCsvByteMatches) {
  const std::string csv = to_csv(run_all(fixture_run()));
  EXPECT_EQ(csv, slurp(kFixtures / "golden" / "bench.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "scenario,model,run,tokens,seconds,prompts,label");
}

TEST(Reports, JsonRoundTripAndDeterminism) {
  auto records = run_all(fixture_run());
  const std::string first = to_report_json(records);
  EXPECT_EQ(first, to_report_json(run_all(fixture_run())));
  sort_records(records);
  EXPECT_EQ(records_from_json(first), records);
  const auto j = nlohmann::json::parse(first);
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["summary"][0]["classification"], "10 / 0 / 0");
  EXPECT_EQ(j["summary"].size(), 6u);
  for (const char* bad : {"{}", R"({"schema":"other","records":[]})", "not json"}) {
    try {
      records_from_json(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), "Io");
    }
  }
}

TEST(Reports, SortedByScenarioModelRun) {
  std::vector<BenchRecord> rs{{"supply", "b", 1}, {"2", "a", 2}, {"2", "a", 1}, {"10", "a", 1}, {"1", "z", 3}};
  sort_records(rs);
  std::vector<std::string> order;
  for (const auto& r : rs) order.push_back(r.scenario + r.model + std::to_string(r.run));
  EXPECT_EQ(order, (std::vector<std::string>{"1z3", "2a1", "2a2", "supplyb1", "10a1"}));
}

TEST(Reports, WriteReportFormatsAndErrors) {
  const auto records = run_scenario(scenario("1"), fixture_run(2));
  const fs::path dir = fs::temp_directory_path();
  write_report(records, dir / "fluc_report.csv");
  write_report(records, dir / "fluc_report.json");
  EXPECT_EQ(slurp(dir / "fluc_report.csv"), to_csv(records));
  EXPECT_EQ(records_from_json(slurp(dir / "fluc_report.json")), records);
  for (const auto& [recs, path] : std::vector<std::pair<std::vector<BenchRecord>, fs::path>>{
           {records, dir / "fluc_report.txt"}, {{}, dir / "fluc_report.csv"}, {records, "/nonexistent/dir/r.csv"}}) {
    try {
      write_report(recs, path);
      ADD_FAILURE() << path;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), "Io");
    }
  }
}
