#include "fluc/supply.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluc/simd/kernels.hpp"

namespace fluc::supply {

namespace {

// The bisection runs well past the 1 mm contract so that the rate at the
// returned distance is within 0.01 Mbit/s of the demand even at very short range.
constexpr double kBisectionTolM = 1e-6;

// Slack (m) when clipping the search to the intersection of per-user boxes.
constexpr double kClipSlackM = 1.0;

}  // namespace

void require_valid(const GroundUser& gu) {
  const bool ok = std::isfinite(gu.x) && std::isfinite(gu.y) && std::isfinite(gu.z) && gu.z >= 0.0 &&
                  std::isfinite(gu.traffic) && gu.traffic > 0.0;
  if (!ok) throw Error("OutOfRange", "ground user needs finite coordinates, z >= 0 and traffic > 0");
}

void require_valid(const RadioModel& r) {
  const bool ok = r.carrier_hz > 0.0 && r.bandwidth_hz > 0.0 && r.min_altitude_m > 0.0 &&
                  r.max_altitude_m >= r.min_altitude_m && std::isfinite(r.tx_power_dbm) &&
                  std::isfinite(r.antenna_gains_dbi) && std::isfinite(r.noise_power_dbm);
  if (!ok) throw Error("OutOfRange", "invalid radio model");
}

double free_space_path_loss_db(double d, const RadioModel& radio) {
  return 20.0 * std::log10(d) + 20.0 * std::log10(radio.carrier_hz) - 147.55;
}

double achievable_rate(double d, const RadioModel& radio) {
  if (!(d > 0.0)) throw Error("NonPositiveDistance", "link distance must be positive");
  const double snr_db =
      radio.tx_power_dbm + radio.antenna_gains_dbi - free_space_path_loss_db(d, radio) - radio.noise_power_dbm;
  return radio.bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0)) / 1e6;
}

double max_link_distance(double traffic, const RadioModel& radio) {
  if (!(traffic > 0.0) || !std::isfinite(traffic)) throw Error("OutOfRange", "traffic demand must be positive");
  if (achievable_rate(kLinkSearchMinM, radio) < traffic)
    throw Error("Infeasible", "traffic demand exceeds the link's short-range capacity");
  if (achievable_rate(kLinkSearchMaxM, radio) >= traffic) return kLinkSearchMaxM;
  double lo = kLinkSearchMinM;  // rate(lo) >= traffic
  double hi = kLinkSearchMaxM;  // rate(hi) < traffic
  while (hi - lo > kBisectionTolM) {
    const double mid = 0.5 * (lo + hi);
    (achievable_rate(mid, radio) >= traffic ? lo : hi) = mid;
  }
  return lo;
}

double energy_proxy(const EnuPoint& p, const EnuPoint& start) {
  const double dx = p.east - start.east;
  const double dy = p.north - start.north;
  return p.up + 0.5 * std::sqrt(dx * dx + dy * dy);
}

SearchGrid search_grid(std::span<const GroundUser> gus, const RadioModel& radio) {
  double rmax = 0.0;
  SearchGrid g;
  g.east_min = g.north_min = std::numeric_limits<double>::infinity();
  g.east_max = g.north_max = -std::numeric_limits<double>::infinity();
  for (const auto& gu : gus) {
    rmax = std::max(rmax, max_link_distance(gu.traffic, radio));
    g.east_min = std::min(g.east_min, gu.x);
    g.east_max = std::max(g.east_max, gu.x);
    g.north_min = std::min(g.north_min, gu.y);
    g.north_max = std::max(g.north_max, gu.y);
  }
  g.east_min = std::floor(g.east_min - rmax);
  g.east_max = std::ceil(g.east_max + rmax);
  g.north_min = std::floor(g.north_min - rmax);
  g.north_max = std::ceil(g.north_max + rmax);
  g.up_min = std::ceil(radio.min_altitude_m);
  g.up_max = std::floor(radio.max_altitude_m);
  return g;
}

Placement place(std::span<const GroundUser> gus, const EnuPoint& start, const RadioModel& radio) {
  require_valid(radio);
  if (gus.empty() || gus.size() > kMaxGroundUsers)
    throw Error("OutOfRange", "between 1 and 32 ground users required");
  for (const auto& gu : gus) require_valid(gu);

  std::vector<double> east, north, up, radius_sq, radius;
  for (const auto& gu : gus) {
    double r = 0.0;
    try {
      r = max_link_distance(gu.traffic, radio);
    } catch (const Error& e) {
      throw Error("InfeasibleQoS", std::string("ground user demand cannot be met: ") + e.what());
    }
    east.push_back(gu.x);
    north.push_back(gu.y);
    up.push_back(gu.z);
    radius.push_back(r);
    radius_sq.push_back(r * r);
  }
  const SearchGrid grid = search_grid(gus, radio);

  // Points outside any single user's bounding box are infeasible; clip to the
  // intersection so only candidate rows are scanned.
  double e_lo = grid.east_min, e_hi = grid.east_max;
  double n_lo = grid.north_min, n_hi = grid.north_max;
  double u_lo = grid.up_min, u_hi = grid.up_max;
  for (std::size_t i = 0; i < gus.size(); ++i) {
    const double r = radius[i] + kClipSlackM;
    e_lo = std::max(e_lo, std::ceil(east[i] - r));
    e_hi = std::min(e_hi, std::floor(east[i] + r));
    n_lo = std::max(n_lo, std::ceil(north[i] - r));
    n_hi = std::min(n_hi, std::floor(north[i] + r));
    u_lo = std::max(u_lo, std::ceil(up[i] - r));
    u_hi = std::min(u_hi, std::floor(up[i] + r));
  }

  const simd::UserSoA users{east, north, up, radius_sq};
  bool found = false;
  Placement best;
  if (e_lo <= e_hi && n_lo <= n_hi) {
    const auto count = static_cast<std::size_t>(n_hi - n_lo) + 1;
    for (double u = u_lo; u <= u_hi; u += 1.0) {
      // objective >= altitude, and equal objectives prefer the lower altitude.
      if (found && u >= best.objective) break;
      for (double e = e_lo; e <= e_hi; e += 1.0) {
        if (found && u + 0.5 * std::abs(e - start.east) > best.objective + 1e-9) continue;
        const simd::GridRow row{e, u, n_lo, count, start.east, start.north};
        const simd::RowBest rb = simd::supply_row_best(row, users);
        if (rb.index >= 0 && (!found || rb.objective < best.objective)) {
          found = true;
          best.objective = rb.objective;
          best.hover = {e, n_lo + static_cast<double>(rb.index), u};
        }
      }
    }
  }
  if (!found) throw Error("InfeasibleQoS", "no position within the search grid satisfies every ground user");
  best.waypoints = {EnuPoint{start.east, start.north, best.hover.up}, best.hover};
  return best;
}

std::vector<EnuPoint> supply_waypoints(std::span<const GroundUser> gus, const EnuPoint& start,
                                       const RadioModel& radio) {
  return place(gus, start, radio).waypoints;
}

std::vector<QosEntry> qos_report(const EnuPoint& p, std::span<const GroundUser> gus, const RadioModel& radio) {
  std::vector<QosEntry> report;
  report.reserve(gus.size());
  for (const auto& gu : gus) {
    QosEntry q;
    q.distance_m = geo::euclid3_m(p, EnuPoint{gu.x, gu.y, gu.z});
    q.rate_mbps = q.distance_m > 0.0 ? achievable_rate(q.distance_m, radio)
                                     : std::numeric_limits<double>::infinity();
    q.satisfied = q.rate_mbps >= gu.traffic;
    report.push_back(q);
  }
  return report;
}

bool all_satisfied(std::span<const QosEntry> report) {
  return std::all_of(report.begin(), report.end(), [](const QosEntry& q) { return q.satisfied; });
}

}  // namespace fluc::supply
