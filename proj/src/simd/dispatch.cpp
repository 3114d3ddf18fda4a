#include <atomic>
#include <cstdlib>
#include <string_view>

#include "fluc/simd/kernels.hpp"

namespace fluc::simd {

namespace {

// -1: no override
std::atomic<int> g_forced{-1};

Isa from_env_or_detect() {
  if (const char* env = std::getenv("FLUC_SIMD"); env && std::string_view(env) == "scalar") return Isa::Scalar;
  return detected_isa();
}

}  // namespace

const char* to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "?";
}

Isa detected_isa() {
#if defined(FLUC_HAVE_AVX2)
  static const bool has_avx2 = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  if (has_avx2) return Isa::Avx2;
#endif
  return Isa::Scalar;
}

Isa active_isa() {
  const int forced = g_forced.load(std::memory_order_relaxed);
  if (forced >= 0) return static_cast<Isa>(forced);
  static const Isa chosen = from_env_or_detect();
  return chosen;
}

void force_isa(std::optional<Isa> isa) {
  if (isa && *isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  g_forced.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

RowBest supply_row_best(const GridRow& row, const UserSoA& users) {
#if defined(FLUC_HAVE_AVX2)
  if (active_isa() == Isa::Avx2) return avx2::supply_row_best(row, users);
#endif
  return scalar::supply_row_best(row, users, 0, row.count);
}

std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height) {
#if defined(FLUC_HAVE_AVX2)
  if (active_isa() == Isa::Avx2)
    return avx2::count_inside_cylinder(east, north, up, center_east, center_north, radius, height);
#endif
  return scalar::count_inside_cylinder(east, north, up, center_east, center_north, radius, height);
}

}  // namespace fluc::simd
