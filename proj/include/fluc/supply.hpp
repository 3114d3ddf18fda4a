#pragma once

#include <span>
#include <vector>

#include "fluc/geodesy.hpp"

namespace fluc::supply {

using geo::EnuPoint;

struct GroundUser {
  double x = 0.0;  // local east, m
  double y = 0.0;  // local north, m
  double z = 0.0;  // up, m
  double traffic = 0.0;  // downlink demand, Mbit/s
};

void require_valid(const GroundUser& gu);

/// Free-space link budget. Defaults: 5180 MHz carrier, 40 MHz channel,
/// 20 dBm transmit power, 5 dBi total antenna gain, -85 dBm noise floor.
struct RadioModel {
  double carrier_hz = 5.18e9;
  double bandwidth_hz = 40e6;
  double tx_power_dbm = 20.0;
  double antenna_gains_dbi = 5.0;
  double noise_power_dbm = -85.0;
  double min_altitude_m = 5.0;
  double max_altitude_m = 150.0;
};

void require_valid(const RadioModel& radio);

double free_space_path_loss_db(double distance_m, const RadioModel& radio);

/// Shannon rate over the FSPL channel, Mbit/s. Throws Error{"NonPositiveDistance"}.
double achievable_rate(double distance_m, const RadioModel& radio);

inline constexpr double kLinkSearchMinM = 0.1;
inline constexpr double kLinkSearchMaxM = 100000.0;

/// Largest distance whose achievable rate still meets `traffic` (bisection,
/// returns the feasible end of the final bracket). Throws Error{"Infeasible"}.
double max_link_distance(double traffic_mbps, const RadioModel& radio);

/// Energy proxy minimized by the placement: altitude + 0.5 * horizontal travel.
double energy_proxy(const EnuPoint& p, const EnuPoint& start);

/// Integer-meter search box: GU bounding box inflated by the largest
/// feasibility radius, altitudes [ceil(min_altitude), floor(max_altitude)].
struct SearchGrid {
  double east_min = 0, east_max = 0;
  double north_min = 0, north_max = 0;
  double up_min = 0, up_max = 0;
};

SearchGrid search_grid(std::span<const GroundUser> gus, const RadioModel& radio);

struct Placement {
  EnuPoint hover;
  double objective = 0.0;
  std::vector<EnuPoint> waypoints;  // climb point above start, then hover
};

inline constexpr std::size_t kMaxGroundUsers = 32;

/// Lowest-energy grid point within every GU's feasibility radius. Ties go to
/// the lower altitude, then lower east, then lower north.
/// Throws Error{"InfeasibleQoS"} when no grid point serves every GU.
Placement place(std::span<const GroundUser> gus, const EnuPoint& start, const RadioModel& radio = {});

std::vector<EnuPoint> supply_waypoints(std::span<const GroundUser> gus, const EnuPoint& start,
                                       const RadioModel& radio = {});

struct QosEntry {
  double distance_m = 0.0;
  double rate_mbps = 0.0;
  bool satisfied = false;
};

std::vector<QosEntry> qos_report(const EnuPoint& p, std::span<const GroundUser> gus, const RadioModel& radio = {});

bool all_satisfied(std::span<const QosEntry> report);

}  // namespace fluc::supply
