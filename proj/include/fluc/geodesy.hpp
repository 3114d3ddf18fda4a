#pragma once

#include "fluc/error.hpp"

namespace fluc::geo {

inline constexpr double kEarthRadiusM = 6371000.0;

/// WGS84 geodetic position. `alt` is meters above the home ground level.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;

  bool operator==(const GeoPoint&) const = default;
};

/// Local east-north-up position in meters, relative to some origin GeoPoint.
struct EnuPoint {
  double east = 0.0;
  double north = 0.0;
  double up = 0.0;

  bool operator==(const EnuPoint&) const = default;
};

EnuPoint operator+(const EnuPoint& a, const EnuPoint& b);
EnuPoint operator-(const EnuPoint& a, const EnuPoint& b);

bool is_valid(const GeoPoint& p);
bool is_finite(const EnuPoint& p);

// Throws Error{"OutOfRange"} unless |lat| <= 90, |lon| <= 180 and alt is finite.
void require_valid(const GeoPoint& p);

/// Equirectangular projection of `p` into the tangent frame at `origin`.
/// Only meaningful for small areas; both coordinate deltas must stay under 1 degree.
EnuPoint enu_from_geo(const GeoPoint& origin, const GeoPoint& p);

/// Exact algebraic inverse of enu_from_geo.
GeoPoint geo_from_enu(const GeoPoint& origin, const EnuPoint& e);

/// Great-circle distance on the spherical Earth, altitude ignored.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

double euclid3_m(const EnuPoint& a, const EnuPoint& b);

double horizontal_m(const EnuPoint& a, const EnuPoint& b);

}  // namespace fluc::geo
