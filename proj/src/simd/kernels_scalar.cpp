#include <cmath>

#include "fluc/simd/kernels.hpp"

namespace fluc::simd::scalar {

RowBest supply_row_best(const GridRow& row, const UserSoA& users, std::size_t begin, std::size_t end) {
  RowBest best;
  const std::size_t n_users = users.east.size();
  const double dxs = row.east - row.start_east;
  const double dxs2 = dxs * dxs;
  for (std::size_t i = begin; i < end; ++i) {
    const double north = row.north0 + static_cast<double>(i);
    bool feasible = true;
    for (std::size_t u = 0; u < n_users && feasible; ++u) {
      const double dx = row.east - users.east[u];
      const double dy = north - users.north[u];
      const double dz = row.up - users.up[u];
      const double d2 = dx * dx + dy * dy + dz * dz;
      feasible = d2 <= users.radius_sq[u];
    }
    if (!feasible) continue;
    const double dys = north - row.start_north;
    const double objective = row.up + 0.5 * std::sqrt(dxs2 + dys * dys);
    if (best.index < 0 || objective < best.objective) {
      best.objective = objective;
      best.index = static_cast<std::ptrdiff_t>(i);
    }
  }
  return best;
}

std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height) {
  const double r2 = radius * radius;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < east.size(); ++i) {
    const double dx = east[i] - center_east;
    const double dy = north[i] - center_north;
    if (dx * dx + dy * dy < r2 && up[i] < height) ++inside;
  }
  return inside;
}

}  // namespace fluc::simd::scalar
