#include "fluc/service.hpp"

#include <chrono>

#include "httplib.h"
#include "json.hpp"

namespace fluc::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr auto kPoll = std::chrono::milliseconds(200);
constexpr auto kKeepAlive = std::chrono::seconds(15);

void reply_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  reply_json(res, status, ordered_json{{"error", kind}, {"message", message}}.dump());
}

std::uint64_t id_of(const std::string& s) { return std::stoull(s); }

}  // namespace

std::string sse_frame(const orchestrator::Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.data + "\n\n";
}

std::string session_json(const orchestrator::Session& s) {
  const sim::VehicleState st = s.vehicle_state();
  const sim::TraceSample now = sim::sample_of(st);
  ordered_json j;
  j["id"] = s.id();
  j["model"] = s.model();
  j["busy"] = s.busy();
  j["vehicle"] = json::parse(sim::to_json_line(now));
  j["vehicle"]["mission_complete"] = st.mission_complete;
  j["vehicle"]["battery_proxy"] = st.battery_proxy;
  j["obstacles"] = ordered_json::array();
  for (const auto& o : s.obstacles()) {
    j["obstacles"].push_back(
        {{"east", o.center_east}, {"north", o.center_north}, {"radius", o.radius}, {"height", o.height}});
  }
  j["outcomes"] = ordered_json::array();
  for (const auto& o : s.outcomes()) j["outcomes"].push_back(ordered_json::parse(orchestrator::to_json(o)));
  j["last_event"] = s.events().last_seq();
  return j.dump();
}

Service::Service(orchestrator::SessionManager& sessions)
    : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error("Bind", "cannot bind " + host);
  } else {
    if (!server_->bind_to_port(host, port)) throw Error("Bind", "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
  }
  return port_;
}

void Service::start() {
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  stopping_ = true;
  server_->stop();
  if (listener_.joinable()) listener_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

void Service::routes() {
  auto& srv = *server_;
  // Without SO_REUSEPORT a second server on a busy port fails to bind.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      reply_error(res, e.kind() == "UnknownSession" ? 404 : 500, e.kind(), e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "Internal", e.what());
    }
  });

  srv.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
    res.status = 204;
  });

  srv.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, ordered_json{{"status", "ok"}, {"sessions", sessions_.list().size()}}.dump());
  });

  srv.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    Config c = sessions_.defaults();
    if (!req.body.empty()) {
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return reply_error(res, 400, "BadRequest", "body must be a JSON object");
      if (body.contains("model")) {
        if (!body["model"].is_string() || body["model"].get<std::string>().empty()) {
          return reply_error(res, 400, "BadRequest", "model must be a non-empty string");
        }
        c.endpoint.model = body["model"].get<std::string>();
      }
    }
    const auto& s = sessions_.create(c);
    reply_json(res, 201, ordered_json{{"id", s.id()}}.dump());
  });

  srv.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, ordered_json{{"sessions", sessions_.list()}}.dump());
  });

  srv.Get(R"(/v1/sessions/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    reply_json(res, 200, session_json(sessions_.get(id_of(req.matches[1]))));
  });

  srv.Get(R"(/v1/sessions/(\d+)/outcomes/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto o = sessions_.get(id_of(req.matches[1])).outcome(id_of(req.matches[2]));
    if (!o) return reply_error(res, 404, "UnknownOutcome", "no finished outcome " + std::string(req.matches[2]));
    reply_json(res, 200, orchestrator::to_json(*o));
  });

  srv.Post(R"(/v1/sessions/(\d+)/prompt)", [this](const httplib::Request& req, httplib::Response& res) {
    auto& session = sessions_.get(id_of(req.matches[1]));
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string()) {
      return reply_error(res, 400, "BadRequest", "expected {\"text\": \"...\"}");
    }
    const std::string text = body["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      return reply_error(res, 400, "BadRequest", "prompt text is empty");
    }
    if (stopping_) return reply_error(res, 503, "Stopping", "service is shutting down");
    const auto oid = session.try_begin();
    if (!oid) return reply_error(res, 409, "MissionActive", "a mission is already running in this session");
    {
      std::lock_guard lock(workers_mu_);
      workers_.emplace_back([&session, id = *oid, text] { session.run(id, text); });
    }
    reply_json(res, 202, ordered_json{{"session", session.id()}, {"outcome_id", *oid}}.dump());
  });

  srv.Get(R"(/v1/sessions/(\d+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
    auto& session = sessions_.get(id_of(req.matches[1]));
    std::uint64_t after = 0;
    const std::string last = req.has_header("Last-Event-ID") ? req.get_header_value("Last-Event-ID")
                                                             : req.get_param_value("after");
    if (!last.empty()) {
      try {
        after = std::stoull(last);
      } catch (const std::exception&) {
        return reply_error(res, 400, "BadRequest", "bad event id");
      }
    }
    const bool once = req.get_param_value("once") == "1";
    res.set_header("Cache-Control", "no-cache");
    auto cursor = std::make_shared<std::uint64_t>(after);
    auto quiet_since = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
    res.set_chunked_content_provider(
        "text/event-stream", [this, &session, once, cursor, quiet_since](std::size_t, httplib::DataSink& sink) {
          if (stopping_) {
            sink.done();
            return true;
          }
          const auto events = once ? session.events().since(*cursor) : session.events().wait_since(*cursor, kPoll);
          for (const auto& e : events) {
            const std::string frame = sse_frame(e);
            if (!sink.write(frame.data(), frame.size())) return false;
            *cursor = e.seq;
          }
          const auto now = std::chrono::steady_clock::now();
          if (!events.empty()) {
            *quiet_since = now;
          } else if (now - *quiet_since > kKeepAlive) {
            static const std::string ping = ": keep-alive\n\n";
            if (!sink.write(ping.data(), ping.size())) return false;
            *quiet_since = now;
          }
          if (once) sink.done();
          return true;
        });
  });
}

}  // namespace fluc::service
