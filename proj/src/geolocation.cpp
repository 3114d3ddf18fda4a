#include "fluc/geolocation.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace fluc::places {

using nlohmann::json;

const char* to_string(Source s) {
  switch (s) {
    case Source::Live: return "Live";
    case Source::Cache: return "Cache";
    case Source::Fixture: return "Fixture";
  }
  return "?";
}

std::string normalize_key(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

namespace {

double coordinate(const json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  double d = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || p != s.data() + s.size()) throw Error("Transport", "bad coordinate '" + s + "'");
  return d;
}

json to_json(const PlaceResult& r) {
  return {{"query", r.query}, {"lat", r.point.lat}, {"lon", r.point.lon}, {"display_name", r.display_name}};
}

}  // namespace

PlaceResult parse_search_response(const std::string& query, std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw Error("Transport", std::string("malformed geocoding response: ") + e.what());
  }
  if (!j.is_array()) throw Error("Transport", "geocoding response is not a JSON array");
  if (j.empty()) throw Error("NotFound", "no place found for '" + query + "'");
  const auto& first = j.front();
  PlaceResult r;
  r.query = query;
  try {
    r.point = {coordinate(first.at("lat")), coordinate(first.at("lon")), 0.0};
    r.display_name = first.value("display_name", query);
  } catch (const json::exception& e) {
    throw Error("Transport", std::string("malformed geocoding result: ") + e.what());
  }
  if (!geo::is_valid(r.point)) throw Error("Transport", "geocoding result out of range");
  r.source = Source::Live;
  return r;
}

NominatimTransport::NominatimTransport(std::string base_url, std::string user_agent, double timeout_s)
    : base_url_(std::move(base_url)), user_agent_(std::move(user_agent)), timeout_s_(timeout_s) {}

std::string NominatimTransport::search(const std::string& query) {
  std::string host = base_url_, prefix;
  const auto scheme = host.find("://");
  const auto slash = host.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (slash != std::string::npos) {
    prefix = host.substr(slash);
    host.resize(slash);
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client cli(host);
  const auto t = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s_));
  cli.set_connection_timeout(t);
  cli.set_read_timeout(t);
  const httplib::Params params{{"q", query}, {"format", "json"}, {"limit", "1"}};
  const httplib::Headers headers{{"User-Agent", user_agent_}};
  auto res = cli.Get(prefix + "/search", params, headers);
  if (!res) throw Error("Transport", "geocoding endpoint " + base_url_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("Transport", "geocoding endpoint returned HTTP " + std::to_string(res->status));
  return res->body;
}

PlaceCache::PlaceCache(std::filesystem::path path) : path_(std::move(path)) {}

void PlaceCache::load() {
  std::unique_lock lock(mu_);
  entries_.clear();
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  std::ifstream in(path_, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    const auto j = json::parse(ss.str());
    if (!j.is_object()) throw Error("CacheIo", "cache file is not a JSON object");
    for (const auto& [key, v] : j.items()) {
      PlaceResult r;
      r.query = v.at("query").get<std::string>();
      r.point = {v.at("lat").get<double>(), v.at("lon").get<double>(), 0.0};
      r.display_name = v.at("display_name").get<std::string>();
      r.source = Source::Cache;
      entries_[key] = r;
    }
  } catch (const std::exception& e) {
    entries_.clear();
    throw Error("CacheIo", "corrupt place cache " + path_.string() + " (" + e.what() + "); starting empty");
  }
}

std::optional<PlaceResult> PlaceCache::get(std::string_view name) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(normalize_key(name));
  if (it == entries_.end()) return std::nullopt;
  PlaceResult r = it->second;
  r.source = Source::Cache;
  return r;
}

void PlaceCache::put(const PlaceResult& result) {
  std::unique_lock lock(mu_);
  PlaceResult stored = result;
  stored.source = Source::Cache;
  entries_[normalize_key(result.query)] = stored;
  save_locked();
}

std::size_t PlaceCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void PlaceCache::save_locked() const {
  if (path_.empty()) return;
  json j = json::object();
  for (const auto& [key, r] : entries_) j[key] = to_json(r);
  const auto tmp = path_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
    if (!out) throw Error("CacheIo", "cannot write place cache " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) throw Error("CacheIo", "cannot replace place cache " + path_.string() + ": " + ec.message());
}

std::map<std::string, PlaceResult> load_place_fixtures(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("FixtureFormat", "cannot open place fixtures " + file.string());
  std::map<std::string, PlaceResult> out;
  try {
    const auto j = json::parse(in);
    for (const auto& [name, v] : j.items()) {
      PlaceResult r;
      r.query = name;
      r.point = {v.at("lat").get<double>(), v.at("lon").get<double>(), 0.0};
      r.display_name = v.value("display_name", name);
      r.source = Source::Fixture;
      geo::require_valid(r.point);
      out[normalize_key(name)] = r;
    }
  } catch (const json::exception& e) {
    throw Error("FixtureFormat", std::string("malformed place fixtures: ") + e.what());
  }
  return out;
}

Resolver::Resolver(PlaceCache& cache, std::map<std::string, PlaceResult> fixtures, GeocodeTransport* live,
                   bool offline)
    : cache_(cache), fixtures_(std::move(fixtures)), live_(live), offline_(offline) {}

PlaceResult Resolver::resolve(const std::string& name) {
  const std::string key = normalize_key(name);
  if (key.empty()) throw Error("OutOfRange", "place name is empty");
  if (offline_) {
    const auto it = fixtures_.find(key);
    if (it == fixtures_.end()) throw Error("OfflineMiss", "'" + name + "' is not in the offline place fixtures");
    PlaceResult r = it->second;
    r.source = Source::Fixture;
    return r;
  }
  if (auto hit = cache_.get(key)) return *hit;
  if (!live_) throw Error("Transport", "no geocoding transport configured");

  std::shared_future<PlaceResult> pending;
  bool owner = false;
  std::promise<PlaceResult> promise;
  {
    std::lock_guard lock(inflight_mu_);
    const auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      pending = it->second;
    } else {
      pending = promise.get_future().share();
      inflight_[key] = pending;
      owner = true;
    }
  }
  if (!owner) return pending.get();

  try {
    PlaceResult r = fetch_live(key, name);
    promise.set_value(r);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  }
  return pending.get();
}

PlaceResult Resolver::fetch_live(const std::string& key, const std::string& name) {
  if (auto hit = cache_.get(key)) return *hit;
  PlaceResult r = parse_search_response(name, live_->search(name));
  try {
    cache_.put(r);
  } catch (const Error&) {
    // Kept in memory; only persisting failed.
  }
  return r;
}

}  // namespace fluc::places
