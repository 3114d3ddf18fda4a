#include "fluc/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fluc::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

[[noreturn]] void out_of_range(const std::string& what) { throw Error("OutOfRange", what); }

}  // namespace

EnuPoint operator+(const EnuPoint& a, const EnuPoint& b) {
  return {a.east + b.east, a.north + b.north, a.up + b.up};
}

EnuPoint operator-(const EnuPoint& a, const EnuPoint& b) {
  return {a.east - b.east, a.north - b.north, a.up - b.up};
}

bool is_valid(const GeoPoint& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && std::isfinite(p.alt) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

bool is_finite(const EnuPoint& p) {
  return std::isfinite(p.east) && std::isfinite(p.north) && std::isfinite(p.up);
}

void require_valid(const GeoPoint& p) {
  if (!is_valid(p)) {
    std::ostringstream os;
    os << "invalid geodetic point (" << p.lat << ", " << p.lon << ", " << p.alt << ")";
    out_of_range(os.str());
  }
}

EnuPoint enu_from_geo(const GeoPoint& origin, const GeoPoint& p) {
  require_valid(origin);
  require_valid(p);
  const double dlat = p.lat - origin.lat;
  const double dlon = p.lon - origin.lon;
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0)) {
    out_of_range("point is more than 1 degree away from the local origin");
  }
  return {
      dlon * kDegToRad * kEarthRadiusM * std::cos(origin.lat * kDegToRad),
      dlat * kDegToRad * kEarthRadiusM,
      p.alt - origin.alt,
  };
}

GeoPoint geo_from_enu(const GeoPoint& origin, const EnuPoint& e) {
  require_valid(origin);
  if (!is_finite(e)) out_of_range("non-finite local offset");
  const double cos_lat = std::cos(origin.lat * kDegToRad);
  GeoPoint p{
      origin.lat + e.north / (kDegToRad * kEarthRadiusM),
      origin.lon + e.east / (kDegToRad * kEarthRadiusM * cos_lat),
      origin.alt + e.up,
  };
  if (!is_valid(p)) out_of_range("local offset leaves the valid latitude/longitude range");
  return p;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

double euclid3_m(const EnuPoint& a, const EnuPoint& b) {
  const double de = a.east - b.east;
  const double dn = a.north - b.north;
  const double du = a.up - b.up;
  return std::sqrt(de * de + dn * dn + du * du);
}

double horizontal_m(const EnuPoint& a, const EnuPoint& b) {
  const double de = a.east - b.east;
  const double dn = a.north - b.north;
  return std::sqrt(de * de + dn * dn);
}

}  // namespace fluc::geo
