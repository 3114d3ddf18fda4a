#include "fluc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace fluc::planner {

using geo::euclid3_m;

namespace {

constexpr double kImproveEps = 1e-9;

struct Horizontal {
  double e;
  double n;
};

// Parameter interval of a->b (horizontal projection) where the horizontal
// distance to the center is < radius, clipped to [0, 1]. Empty when t0 >= t1.
std::pair<double, double> horizontal_overlap(const EnuPoint& a, const EnuPoint& b, double ce, double cn,
                                             double radius) {
  const double de = b.east - a.east;
  const double dn = b.north - a.north;
  const double fe = a.east - ce;
  const double fn = a.north - cn;
  const double qa = de * de + dn * dn;
  const double qb = 2.0 * (fe * de + fn * dn);
  const double qc = fe * fe + fn * fn - radius * radius;
  if (qa == 0.0) return qc < 0.0 ? std::pair{0.0, 1.0} : std::pair{1.0, 0.0};
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return {1.0, 0.0};
  const double root = std::sqrt(disc);
  const double t0 = (-qb - root) / (2.0 * qa);
  const double t1 = (-qb + root) / (2.0 * qa);
  return {std::max(0.0, t0), std::min(1.0, t1)};
}

EnuPoint detour_point(const EnuPoint& a, const EnuPoint& b, const Obstacle& o, double margin) {
  const double de = b.east - a.east;
  const double dn = b.north - a.north;
  const double len = std::sqrt(de * de + dn * dn);
  const double ue = de / len;
  const double un = dn / len;
  const double t = std::clamp(((o.center_east - a.east) * de + (o.center_north - a.north) * dn) / (len * len),
                              0.0, 1.0);
  // Center to the left of travel (cross > 0) -> pass on the right, and vice versa.
  const double cross = ue * (o.center_north - a.north) - un * (o.center_east - a.east);
  Horizontal normal = cross > 0.0 ? Horizontal{un, -ue} : Horizontal{-un, ue};
  const double reach = (o.radius + margin) * kDetourSlack;
  return {o.center_east + normal.e * reach, o.center_north + normal.n * reach, a.up + t * (b.up - a.up)};
}

void route_recursive(const EnuPoint& a, const EnuPoint& b, std::span<const Obstacle> obstacles, double margin,
                     int depth, std::vector<EnuPoint>& out) {
  for (const auto& o : obstacles) {
    if (inside_inflated(a, o, margin) || inside_inflated(b, o, margin))
      throw Error("Unroutable", "route endpoint lies inside an inflated obstacle");
  }
  const auto blocking = std::find_if(obstacles.begin(), obstacles.end(),
                                     [&](const Obstacle& o) { return segment_blocked(a, b, o, margin); });
  if (blocking == obstacles.end()) {
    out.push_back(b);
    return;
  }
  if (depth >= kMaxDetourDepth) throw Error("Unroutable", "obstacle detour depth limit exceeded");
  const EnuPoint d = detour_point(a, b, *blocking, margin);
  route_recursive(a, d, obstacles, margin, depth + 1, out);
  route_recursive(d, b, obstacles, margin, depth + 1, out);
}

}  // namespace

void require_valid(const Obstacle& o) {
  const bool ok = std::isfinite(o.center_east) && std::isfinite(o.center_north) && std::isfinite(o.radius) &&
                  std::isfinite(o.height) && o.radius > 0.0 && o.height > 0.0;
  if (!ok) throw Error("OutOfRange", "obstacle radius and height must be positive and finite");
}

double path_length(std::span<const EnuPoint> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += euclid3_m(points[i - 1], points[i]);
  return total;
}

std::vector<std::size_t> nearest_neighbor_order(const EnuPoint& start, std::span<const EnuPoint> waypoints) {
  std::vector<std::size_t> order;
  std::vector<bool> used(waypoints.size(), false);
  EnuPoint at = start;
  for (std::size_t step = 0; step < waypoints.size(); ++step) {
    std::size_t pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      if (used[i]) continue;
      const double d = euclid3_m(at, waypoints[i]);
      if (d < best) {
        best = d;
        pick = i;
      }
    }
    used[pick] = true;
    order.push_back(pick);
    at = waypoints[pick];
  }
  return order;
}

Route optimize_order(const EnuPoint& start, std::span<const EnuPoint> waypoints) {
  const std::size_t n = waypoints.size();
  if (n == 0) throw Error("Empty", "no waypoints to order");
  if (n > kMaxWaypoints) throw Error("TooMany", "at most 64 waypoints can be ordered, got " + std::to_string(n));

  // dist[0] is the start, dist[i + 1] waypoint i.
  std::vector<EnuPoint> nodes;
  nodes.reserve(n + 1);
  nodes.push_back(start);
  nodes.insert(nodes.end(), waypoints.begin(), waypoints.end());
  std::vector<double> dist((n + 1) * (n + 1));
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) dist[i * (n + 1) + j] = euclid3_m(nodes[i], nodes[j]);
  auto d = [&](std::size_t i, std::size_t j) { return dist[i * (n + 1) + j]; };

  std::vector<std::size_t> order;
  if (n <= kExactOrderLimit) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double len = d(0, perm[0] + 1);
      for (std::size_t k = 1; k < n; ++k) len += d(perm[k - 1] + 1, perm[k] + 1);
      if (len < best) {
        best = len;
        order = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    order = nearest_neighbor_order(start, waypoints);
    // seq[0] is the fixed start node; reversing seq[i..j] is the 2-opt move.
    std::vector<std::size_t> seq{0};
    for (std::size_t w : order) seq.push_back(w + 1);
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t i = 1; i < n && !improved; ++i) {
        for (std::size_t j = i + 1; j <= n && !improved; ++j) {
          double delta = d(seq[i - 1], seq[j]) - d(seq[i - 1], seq[i]);
          if (j < n) delta += d(seq[i], seq[j + 1]) - d(seq[j], seq[j + 1]);
          if (delta < -kImproveEps) {
            std::reverse(seq.begin() + static_cast<std::ptrdiff_t>(i),
                         seq.begin() + static_cast<std::ptrdiff_t>(j) + 1);
            improved = true;
          }
        }
      }
    }
    for (std::size_t k = 0; k < n; ++k) order[k] = seq[k + 1] - 1;
  }

  Route route;
  route.order = order;
  route.points.push_back(start);
  for (std::size_t idx : order) route.points.push_back(waypoints[idx]);
  route.total_length = path_length(route.points);
  return route;
}

bool inside_inflated(const EnuPoint& p, const Obstacle& o, double margin) {
  const double r = o.radius + margin;
  const double de = p.east - o.center_east;
  const double dn = p.north - o.center_north;
  return de * de + dn * dn < r * r && p.up < o.height + margin;
}

bool segment_blocked(const EnuPoint& a, const EnuPoint& b, const Obstacle& o, double margin) {
  const auto [t0, t1] = horizontal_overlap(a, b, o.center_east, o.center_north, o.radius + margin);
  if (!(t0 < t1)) return false;
  // Altitude is linear along the segment; its minimum over [t0, t1] is at an end.
  const double up0 = a.up + t0 * (b.up - a.up);
  const double up1 = a.up + t1 * (b.up - a.up);
  return std::min(up0, up1) < o.height + margin;
}

std::vector<EnuPoint> route_around(const EnuPoint& a, const EnuPoint& b, std::span<const Obstacle> obstacles,
                                   double margin) {
  if (!(margin >= 0.0)) throw Error("OutOfRange", "obstacle margin must be >= 0");
  for (const auto& o : obstacles) require_valid(o);
  std::vector<EnuPoint> out{a};
  route_recursive(a, b, obstacles, margin, 0, out);
  return out;
}

EnuPoint diagonal_leg(double distance) {
  if (!(distance > 0.0)) throw Error("NonPositive", "diagonal leg distance must be positive");
  const double side = distance / std::sqrt(2.0);
  return {side, side, 0.0};
}

}  // namespace fluc::planner
