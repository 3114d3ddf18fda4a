#pragma once

#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "fluc/error.hpp"
#include "fluc/geodesy.hpp"

namespace fluc::places {

enum class Source { Live, Cache, Fixture };

const char* to_string(Source s);

struct PlaceResult {
  std::string query;
  geo::GeoPoint point;  // alt 0
  std::string display_name;
  Source source = Source::Live;

  bool operator==(const PlaceResult&) const = default;
};

/// Lowercased, surrounding whitespace trimmed, inner runs collapsed to one space.
std::string normalize_key(std::string_view name);

class GeocodeTransport {
 public:
  virtual ~GeocodeTransport() = default;
  /// Raw response body of a search for `query`. Throws Error{"Transport"}.
  virtual std::string search(const std::string& query) = 0;
};

/// GET {base}/search?q=...&format=json&limit=1 with a descriptive User-Agent.
class NominatimTransport : public GeocodeTransport {
 public:
  explicit NominatimTransport(std::string base_url = "https://nominatim.openstreetmap.org",
                              std::string user_agent = "fluc/0.1 (UAV mission planner)", double timeout_s = 20.0);
  std::string search(const std::string& query) override;

 private:
  std::string base_url_;
  std::string user_agent_;
  double timeout_s_;
};

/// First result of a search response. Throws Error{"NotFound"} or Error{"Transport"}.
PlaceResult parse_search_response(const std::string& query, std::string_view body);

/// Normalized-key place cache persisted as a JSON object. An empty path keeps
/// the cache in memory only.
class PlaceCache {
 public:
  explicit PlaceCache(std::filesystem::path path = {});

  /// Reads the file if present. A corrupt file throws Error{"CacheIo"} and the
  /// cache starts over empty (the file is rewritten on the next put).
  void load();
  std::optional<PlaceResult> get(std::string_view name) const;
  /// Stores and persists. Throws Error{"CacheIo"} when the file cannot be written.
  void put(const PlaceResult& result);
  std::size_t size() const;

 private:
  void save_locked() const;

  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, PlaceResult> entries_;
};

/// fixtures/places/places.json: {"FEUP": {"lat": .., "lon": .., "display_name": ".."}, ...}
std::map<std::string, PlaceResult> load_place_fixtures(const std::filesystem::path& file);

class Resolver {
 public:
  /// `live` may be null (no network). Offline mode answers from fixtures only.
  Resolver(PlaceCache& cache, std::map<std::string, PlaceResult> fixtures, GeocodeTransport* live, bool offline);

  /// Errors: NotFound, Transport, OfflineMiss, OutOfRange (empty name).
  PlaceResult resolve(const std::string& name);

 private:
  PlaceResult fetch_live(const std::string& key, const std::string& name);

  PlaceCache& cache_;
  std::map<std::string, PlaceResult> fixtures_;
  GeocodeTransport* live_;
  bool offline_;
  std::mutex inflight_mu_;
  std::map<std::string, std::shared_future<PlaceResult>> inflight_;
};

}  // namespace fluc::places
