#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fluc/geodesy.hpp"

namespace fluc::planner {

using geo::EnuPoint;

/// Vertical cylinder standing on the ground, in the local frame.
struct Obstacle {
  double center_east = 0.0;
  double center_north = 0.0;
  double radius = 0.0;
  double height = 0.0;

  bool operator==(const Obstacle&) const = default;
};

void require_valid(const Obstacle& o);

struct Route {
  std::vector<EnuPoint> points;    // start first
  std::vector<std::size_t> order;  // indices into the input waypoints, visit order
  double total_length = 0.0;
};

double path_length(std::span<const EnuPoint> points);

inline constexpr std::size_t kExactOrderLimit = 8;
inline constexpr std::size_t kMaxWaypoints = 64;

/// Shortest open path from `start` through every waypoint once.
/// Exact (all permutations, first lexicographic minimum) up to 8 waypoints,
/// nearest neighbour followed by 2-opt above that.
Route optimize_order(const EnuPoint& start, std::span<const EnuPoint> waypoints);

/// Nearest-neighbour construction only (ties to the lower index). Exposed so
/// callers can compare the 2-opt result against its seed.
std::vector<std::size_t> nearest_neighbor_order(const EnuPoint& start, std::span<const EnuPoint> waypoints);

inline constexpr double kDefaultMarginM = 5.0;
inline constexpr double kDetourSlack = 1.05;
inline constexpr int kMaxDetourDepth = 8;

/// True when `p` lies inside the obstacle inflated by `margin` (radius and height).
bool inside_inflated(const EnuPoint& p, const Obstacle& o, double margin);

/// True when the straight segment a->b passes through the inflated obstacle.
bool segment_blocked(const EnuPoint& a, const EnuPoint& b, const Obstacle& o, double margin);

/// Polyline from a to b (both included) that clears every obstacle inflated by
/// `margin`, built by recursive tangent-side detours. Throws Error{"Unroutable"}.
std::vector<EnuPoint> route_around(const EnuPoint& a, const EnuPoint& b, std::span<const Obstacle> obstacles,
                                   double margin = kDefaultMarginM);

/// Horizontal 45-degree leg of the given length: equal east and north.
/// Throws Error{"NonPositive"} for distance <= 0.
EnuPoint diagonal_leg(double distance);

}  // namespace fluc::planner
