#pragma once

// Data-parallel inner loops of the supply grid search and the obstacle
// clearance check. Every kernel has a scalar reference implementation and an
// AVX2 variant; the dispatcher picks one at runtime. Both produce bit-identical
// results: same operation order, no FMA contraction (-ffp-contract=off).

#include <cstddef>
#include <optional>
#include <span>

namespace fluc::simd {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);

/// Best ISA the running CPU supports (and this build was compiled for).
Isa detected_isa();

/// ISA used by the dispatching entry points. FLUC_SIMD=scalar in the
/// environment, or force_isa(), pins it.
Isa active_isa();
void force_isa(std::optional<Isa> isa);

/// Ground users in structure-of-arrays form. radius_sq is each user's
/// squared maximum link distance.
struct UserSoA {
  std::span<const double> east;
  std::span<const double> north;
  std::span<const double> up;
  std::span<const double> radius_sq;
};

/// One row of the grid: fixed east and altitude, north = north0 + i for
/// i in [0, count).
struct GridRow {
  double east = 0.0;
  double up = 0.0;
  double north0 = 0.0;
  std::size_t count = 0;
  double start_east = 0.0;
  double start_north = 0.0;
};

struct RowBest {
  double objective = 0.0;
  std::ptrdiff_t index = -1;  // -1: no feasible point in the row
};

/// Feasible iff squared 3D distance to every user <= its radius_sq.
/// Objective: up + 0.5 * horizontal distance to (start_east, start_north).
/// Returns the minimal objective and the first index achieving it.
RowBest supply_row_best(const GridRow& row, const UserSoA& users);

/// Number of samples strictly inside a ground-based vertical cylinder:
/// horizontal distance < radius and up < height.
std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height);

namespace scalar {
RowBest supply_row_best(const GridRow& row, const UserSoA& users, std::size_t begin, std::size_t end);
std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height);
}  // namespace scalar

#if defined(FLUC_HAVE_AVX2)
namespace avx2 {
RowBest supply_row_best(const GridRow& row, const UserSoA& users);
std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height);
}  // namespace avx2
#endif

}  // namespace fluc::simd
