#include "fluc/config.hpp"

#include <fstream>
#include <sstream>

#include "toml.hpp"

namespace fluc {

namespace {

template <typename T>
void read(const toml::table& root, std::string_view path, T& out) {
  const auto node = root.at_path(path);
  if (!node) return;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node.value<double>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node.value_exact<bool>()) {
      out = *v;
      return;
    }
  } else if constexpr (std::is_same_v<T, int>) {
    if (auto v = node.value_exact<int64_t>()) {
      out = static_cast<int>(*v);
      return;
    }
  } else {
    if (auto v = node.value_exact<std::string>()) {
      out = *v;
      return;
    }
  }
  throw Error("Config", "config key '" + std::string(path) + "' has the wrong type");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

Config parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config line " << e.source().begin.line << ": " << e.description();
    throw Error("Config", os.str());
  }
  Config c;
  std::string replay, fixtures, cache;
  read(root, "llm.endpoint", c.endpoint.url);
  read(root, "llm.model", c.endpoint.model);
  read(root, "llm.timeout_s", c.endpoint.timeout_s);
  read(root, "llm.max_attempts", c.max_attempts);
  read(root, "llm.replay_fixture", replay);
  read(root, "llm.rules", c.rules);
  read(root, "home.lat", c.home.lat);
  read(root, "home.lon", c.home.lon);
  read(root, "sim.speed_factor", c.speed_factor);
  read(root, "sim.timeout_s", c.sim_timeout_s);
  read(root, "places.offline", c.offline_places);
  read(root, "places.fixtures", fixtures);
  read(root, "places.cache", cache);
  read(root, "places.geocoder", c.geocoder_url);

  c.replay_fixture = resolve(base_dir, replay);
  c.place_fixtures = resolve(base_dir, fixtures);
  if (!cache.empty()) c.geocache = resolve(base_dir, cache);

  if (c.max_attempts < 1) throw Error("Config", "llm.max_attempts must be at least 1");
  if (!(c.endpoint.timeout_s > 0)) throw Error("Config", "llm.timeout_s must be positive");
  if (!(c.speed_factor >= 0)) throw Error("Config", "sim.speed_factor must be >= 0");
  if (!(c.sim_timeout_s > 0)) throw Error("Config", "sim.timeout_s must be positive");
  if (!geo::is_valid(c.home)) throw Error("Config", "home position out of range");
  return c;
}

Config load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("Config", "cannot open config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

}  // namespace fluc
