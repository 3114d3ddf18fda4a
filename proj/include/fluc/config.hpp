#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "fluc/geodesy.hpp"
#include "fluc/llm.hpp"

namespace fluc {

struct Config {
  llm::EndpointConfig endpoint;
  /// When set, the LLM is replaced by this recorded transcript.
  std::filesystem::path replay_fixture;
  int max_attempts = llm::kDefaultMaxAttempts;
  std::string rules;  // extra lines appended to the init prompt

  geo::GeoPoint home{41.1770, -8.5960, 0.0};

  double speed_factor = 0.0;  // 0: as fast as possible
  double sim_timeout_s = 600.0;

  bool offline_places = false;
  std::filesystem::path place_fixtures;
  std::filesystem::path geocache = "geocache.json";
  std::string geocoder_url = "https://nominatim.openstreetmap.org";
};

/// Throws Error{"Config"} on syntax errors, wrong types or out-of-range values.
Config parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& file);

}  // namespace fluc
