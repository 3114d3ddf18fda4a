#include <csignal>
#include <cstdio>
#include <iostream>
#include <pthread.h>
#include <unistd.h>

#include "CLI11.hpp"
#include "fluc/bench.hpp"
#include "fluc/config.hpp"
#include "fluc/orchestrator.hpp"
#include "fluc/repl.hpp"
#include "fluc/service.hpp"

namespace {

using namespace fluc;

struct Common {
  std::string config_file;
  std::string model;
  std::string replay;
  bool offline = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "TOML configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--model", c.model, "Model id sent to the chat endpoint");
  cmd->add_option("--replay", c.replay, "Replay a recorded transcript instead of calling the model")
      ->check(CLI::ExistingFile);
  cmd->add_flag("--offline", c.offline, "Resolve places from fixtures and the cache only");
}

Config make_config(const Common& c) {
  Config cfg = c.config_file.empty() ? Config{} : load_config(c.config_file);
  if (!c.model.empty()) cfg.endpoint.model = c.model;
  if (!c.replay.empty()) cfg.replay_fixture = c.replay;
  if (c.offline) cfg.offline_places = true;
  return cfg;
}

int cmd_repl(const Common& c) {
  orchestrator::SessionManager manager(make_config(c));
  auto& session = manager.create();
  std::cout << "fluc: model " << session.model() << ", :help for commands\n";
  repl::run(session, std::cin, std::cout, isatty(STDIN_FILENO) != 0);
  return 0;
}

int cmd_serve(const Common& c, const std::string& host, int port) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  orchestrator::SessionManager manager(make_config(c));
  service::Service svc(manager);
  const int bound = svc.bind(host, port);
  svc.start();
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down" << std::endl;
  svc.stop();
  return 0;
}

struct BenchArgs {
  std::vector<std::string> scenarios;
  int reps = 10;
  std::string fixtures;
  std::string places;
  std::string out;
};

void print_summary(const std::string& id, const std::vector<bench::BenchRecord>& records) {
  std::vector<double> tokens, seconds, prompts;
  for (const auto& r : records) {
    tokens.push_back(static_cast<double>(r.tokens));
    seconds.push_back(r.seconds);
    prompts.push_back(r.prompts);
  }
  auto stat = [](const std::vector<double>& xs) {
    char buf[64];
    if (xs.size() < 2) {
      std::snprintf(buf, sizeof buf, "%.2f", xs.empty() ? 0.0 : xs[0]);
    } else {
      const auto a = bench::aggregate(xs);
      std::snprintf(buf, sizeof buf, "%.2f ± %.2f", a.mean, a.half_width);
    }
    return std::string(buf);
  };
  std::cout << "scenario " << id << ": tokens " << stat(tokens) << ", seconds " << stat(seconds) << ", prompts "
            << stat(prompts) << ", S/P/U " << bench::classification_line(records) << "\n";
}

int cmd_bench(const Common& c, const BenchArgs& a) {
  bench::RunConfig rc;
  rc.base = make_config(c);
  rc.model = rc.base.endpoint.model;
  rc.reps = a.reps;
  if (!a.fixtures.empty()) {
    rc.fixtures = a.fixtures;
    rc.base.place_fixtures = a.places.empty() ? rc.fixtures / ".." / "places" / "places.json"
                                              : std::filesystem::path(a.places);
  } else if (!a.places.empty()) {
    rc.base.place_fixtures = a.places;
  }

  std::vector<std::string> ids = a.scenarios;
  if (ids.size() == 1 && ids[0] == "all") {
    ids.clear();
    for (const auto& s : bench::scenarios()) ids.push_back(s.id);
  }
  std::vector<bench::BenchRecord> all;
  for (const auto& id : ids) {
    const auto records = bench::run_scenario(bench::scenario(id), rc);
    print_summary(id, records);
    all.insert(all.end(), records.begin(), records.end());
  }
  if (!a.out.empty()) {
    bench::write_report(all, a.out);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Natural-language UAV mission control"};
  app.require_subcommand(1);

  Common repl_opts;
  auto* repl_cmd = app.add_subcommand("repl", "Interactive prompt loop against one simulated vehicle");
  add_common(repl_cmd, repl_opts);

  Common serve_opts;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/SSE service for the console");
  add_common(serve_cmd, serve_opts);
  serve_cmd->add_option("--host", host, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port (0 picks a free one)")->check(CLI::Range(0, 65535));

  Common bench_opts;
  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark scenarios");
  bench_cmd->require_subcommand(1);
  auto* run_cmd = bench_cmd->add_subcommand("run", "Run scenarios and write a report");
  add_common(run_cmd, bench_opts);
  std::vector<std::string> ids{"all"};
  for (const auto& s : bench::scenarios()) ids.push_back(s.id);
  run_cmd->add_option("--scenario", bench_args.scenarios, "Scenario id (1-5, supply or all); repeatable")
      ->required()
      ->check(CLI::IsMember(ids));
  run_cmd->add_option("--reps", bench_args.reps, "Runs per scenario")->check(CLI::PositiveNumber);
  run_cmd->add_option("--fixtures", bench_args.fixtures, "Transcript directory; replays instead of calling the model")
      ->check(CLI::ExistingDirectory);
  run_cmd->add_option("--places", bench_args.places, "Place fixture file");
  run_cmd->add_option("--out", bench_args.out, "Report path (.csv or .json)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*repl_cmd) return cmd_repl(repl_opts);
    if (*serve_cmd) return cmd_serve(serve_opts, host, port);
    if (*run_cmd) return cmd_bench(bench_opts, bench_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
