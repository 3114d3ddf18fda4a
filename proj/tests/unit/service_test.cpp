#include <gtest/gtest.h>

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "fluc/service.hpp"
#include "httplib.h"
#include "json.hpp"
#include "scripted_backend.hpp"

using namespace fluc;
using namespace fluc::orchestrator;
using nlohmann::json;
using testing_support::fenced;
using testing_support::offline_config;
using testing_support::scripted;

namespace {

using Clock = std::chrono::steady_clock;

const std::string kCoords = fenced("go_to_real_world_coords(41.1783107, -8.591609, 17)");

struct Frame {
  std::uint64_t id = 0;
  std::string event;
  json data;
  Clock::time_point arrived;
};

// Collects SSE frames until `stop_at` arrives (or the stream ends).
class SseReader {
 public:
  std::vector<Frame> read(httplib::Client& cli, const std::string& path, const std::string& stop_at,
                          const httplib::Headers& headers = {}) {
    std::vector<Frame> frames;
    std::string buf;
    cli.Get(path, headers, [&](const char* data, std::size_t len) {
      buf.append(data, len);
      std::size_t end;
      while ((end = buf.find("\n\n")) != std::string::npos) {
        const std::string block = buf.substr(0, end);
        buf.erase(0, end + 2);
        if (block.empty() || block[0] == ':') continue;
        Frame f;
        f.arrived = Clock::now();
        std::size_t pos = 0;
        while (pos < block.size()) {
          std::size_t nl = block.find('\n', pos);
          if (nl == std::string::npos) nl = block.size();
          const std::string line = block.substr(pos, nl - pos);
          pos = nl + 1;
          if (line.rfind("id: ", 0) == 0) f.id = std::stoull(line.substr(4));
          if (line.rfind("event: ", 0) == 0) f.event = line.substr(7);
          if (line.rfind("data: ", 0) == 0) f.data = json::parse(line.substr(6));
        }
        frames.push_back(f);
        if (!stop_at.empty() && f.event == stop_at) return false;
      }
      return true;
    });
    return frames;
  }
};

class ServiceTest : public ::testing::Test {
 protected:
  void boot(Config config, BackendFactory factory) {
    manager_ = std::make_unique<SessionManager>(std::move(config), std::move(factory));
    service_ = std::make_unique<service::Service>(*manager_);
    service_->bind("127.0.0.1", 0);
    service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", service_->port());
    client_->set_read_timeout(30, 0);
  }

  void TearDown() override {
    if (service_) service_->stop();
  }

  std::uint64_t new_session() {
    const auto res = client_->Post("/v1/sessions", "", "application/json");
    EXPECT_EQ(res->status, 201);
    return json::parse(res->body).at("id").get<std::uint64_t>();
  }

  std::string session_path(std::uint64_t id) { return "/v1/sessions/" + std::to_string(id); }

  std::unique_ptr<SessionManager> manager_;
  std::unique_ptr<service::Service> service_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(ServiceTest, HealthAndSessionLifecycle) {
  boot(offline_config(), scripted({}));
  auto health = client_->Get("/v1/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  const auto a = new_session();
  const auto b = new_session();
  EXPECT_NE(a, b);
  const auto list = client_->Get("/v1/sessions");
  EXPECT_EQ(json::parse(list->body)["sessions"], json::array({a, b}));

  const auto got = client_->Get(session_path(a));
  ASSERT_EQ(got->status, 200);
  const json j = json::parse(got->body);
  EXPECT_EQ(j["vehicle"]["phase"], "Disarmed");
  EXPECT_EQ(j["busy"], false);
  EXPECT_TRUE(j["outcomes"].empty());

  EXPECT_EQ(client_->Get("/v1/sessions/999")->status, 404);
  EXPECT_EQ(client_->Get("/v1/sessions/999/events?once=1")->status, 404);
}

TEST_F(ServiceTest, BadRequests) {
  boot(offline_config(), scripted({}));
  const auto id = new_session();
  const std::string p = session_path(id) + "/prompt";
  EXPECT_EQ(client_->Post(p, "{not json", "application/json")->status, 400);
  EXPECT_EQ(client_->Post(p, "[1]", "application/json")->status, 400);
  EXPECT_EQ(client_->Post(p, R"({"txt":"go"})", "application/json")->status, 400);
  EXPECT_EQ(client_->Post(p, R"({"text":42})", "application/json")->status, 400);
  EXPECT_EQ(client_->Post(p, R"({"text":"   "})", "application/json")->status, 400);
  EXPECT_EQ(client_->Post("/v1/sessions/77/prompt", R"({"text":"go"})", "application/json")->status, 404);
  EXPECT_EQ(client_->Post("/v1/sessions", "{bad", "application/json")->status, 400);
  const auto res = client_->Post(p, "{not json", "application/json");
  EXPECT_EQ(json::parse(res->body)["error"], "BadRequest");
}

TEST_F(ServiceTest, PromptRunsAndOutcomeMatchesLibrary) {
  boot(offline_config(), scripted({"no code here", kCoords}));
  const auto id = new_session();
  const auto res = client_->Post(session_path(id) + "/prompt", R"({"text":"Go to 41.1783107 -8.591609 17"})",
                                 "application/json");
  ASSERT_EQ(res->status, 202);
  const auto oid = json::parse(res->body).at("outcome_id").get<std::uint64_t>();

  SseReader reader;
  const auto frames = reader.read(*client_, session_path(id) + "/events", "outcome");
  ASSERT_FALSE(frames.empty());
  EXPECT_EQ(frames.back().event, "outcome");
  EXPECT_EQ(frames.back().data["label"], "PartiallyCorrect");
  EXPECT_EQ(frames.back().data["prompts_used"], 2);
  for (std::size_t i = 0; i < frames.size(); ++i) EXPECT_EQ(frames[i].id, i + 1);

  const auto served = client_->Get(session_path(id) + "/outcomes/" + std::to_string(oid));
  ASSERT_EQ(served->status, 200);
  const auto library = manager_->get(id).outcome(oid);
  ASSERT_TRUE(library);
  EXPECT_TRUE(same_outcome(outcome_from_json(served->body), *library));
  EXPECT_EQ(served->body, to_json(*library));

  const json state = json::parse(client_->Get(session_path(id))->body);
  EXPECT_EQ(state["outcomes"].size(), 1u);
  EXPECT_EQ(state["vehicle"]["phase"], "EnRoute");
  EXPECT_EQ(client_->Get(session_path(id) + "/outcomes/99")->status, 404);
}

TEST_F(ServiceTest, ReplayAndResumeFromLastEventId) {
  boot(offline_config(), scripted({kCoords}));
  const auto id = new_session();
  ASSERT_TRUE(handle_prompt(manager_->get(id), "go").succeeded());
  SseReader reader;
  const auto all = reader.read(*client_, session_path(id) + "/events?once=1", "");
  ASSERT_GT(all.size(), 5u);
  EXPECT_EQ(all.size(), manager_->get(id).events().last_seq());
  const auto tail = reader.read(*client_, session_path(id) + "/events?once=1", "", {{"Last-Event-ID", "3"}});
  ASSERT_EQ(tail.size(), all.size() - 3);
  EXPECT_EQ(tail.front().id, 4u);
  const auto by_param = reader.read(*client_, session_path(id) + "/events?once=1&after=3", "");
  EXPECT_EQ(by_param.size(), tail.size());
}

TEST_F(ServiceTest, BusySessionAnswers409) {
  std::mutex mu;
  std::condition_variable cv;
  bool release = false;
  class Gate : public llm::Backend {
   public:
    Gate(std::mutex& mu, std::condition_variable& cv, bool& release) : mu_(mu), cv_(cv), release_(release) {}
    llm::Completion complete(const std::vector<llm::Message>&) override {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return release_; });
      return {kCoords, 1, 1, false, 0.1};
    }
    std::string model() const override { return "gate"; }

   private:
    std::mutex& mu_;
    std::condition_variable& cv_;
    bool& release_;
  };
  boot(offline_config(), [&](const Config&) { return std::make_unique<Gate>(mu, cv, release); });
  const auto id = new_session();
  const std::string p = session_path(id) + "/prompt";
  EXPECT_EQ(client_->Post(p, R"({"text":"one"})", "application/json")->status, 202);
  const auto second = client_->Post(p, R"({"text":"two"})", "application/json");
  EXPECT_EQ(second->status, 409);
  EXPECT_EQ(json::parse(second->body)["error"], "MissionActive");
  EXPECT_EQ(json::parse(client_->Get(session_path(id))->body)["busy"], true);
  {
    std::lock_guard lock(mu);
    release = true;
  }
  cv.notify_all();
  SseReader reader;
  reader.read(*client_, session_path(id) + "/events", "outcome");
  EXPECT_EQ(client_->Post(p, R"({"text":"three"})", "application/json")->status, 202);
}

TEST_F(ServiceTest, TelemetryAtLeastOncePerSecondDuringFlight) {
  Config c = offline_config();
  c.speed_factor = 1.0;
  boot(c, scripted({fenced("takeoff(5)\nmove_relative(20, 0, 0)")}));
  const auto id = new_session();
  ASSERT_EQ(client_->Post(session_path(id) + "/prompt", R"({"text":"short hop"})", "application/json")->status, 202);
  SseReader reader;
  const auto frames = reader.read(*client_, session_path(id) + "/events", "outcome");

  std::vector<Clock::time_point> telemetry;
  Clock::time_point started{}, finished{};
  for (const auto& f : frames) {
    if (f.event == "telemetry") telemetry.push_back(f.arrived);
    if (f.event == "state" && f.data["stage"] == "start") started = f.arrived;
    if (f.event == "state" && f.data["stage"] == "done") finished = f.arrived;
  }
  ASSERT_NE(started, Clock::time_point{});
  ASSERT_NE(finished, Clock::time_point{});
  const double flight = std::chrono::duration<double>(finished - started).count();
  EXPECT_GT(flight, 3.0);
  EXPECT_GE(static_cast<double>(telemetry.size()), std::floor(flight));
  for (std::size_t i = 1; i < telemetry.size(); ++i) {
    EXPECT_LE(std::chrono::duration<double>(telemetry[i] - telemetry[i - 1]).count(), 1.3) << i;
  }
}

TEST(ServiceBind, PortInUseIsBindError) {
  SessionManager m(offline_config(), scripted({}));
  service::Service first(m);
  const int port = first.bind("127.0.0.1", 0);
  service::Service second(m);
  try {
    second.bind("127.0.0.1", port);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "Bind");
  }
}
