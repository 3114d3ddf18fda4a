// Compiled with -mavx2 only. Callers must go through the dispatcher, which
// checks CPU support first.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "fluc/simd/kernels.hpp"

namespace fluc::simd::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256d lane_offsets(std::size_t i) {
  return _mm256_set_pd(static_cast<double>(i + 3), static_cast<double>(i + 2), static_cast<double>(i + 1),
                       static_cast<double>(i));
}

}  // namespace

RowBest supply_row_best(const GridRow& row, const UserSoA& users) {
  const std::size_t n_users = users.east.size();
  const std::size_t vec_end = row.count - row.count % kLanes;

  const __m256d v_north0 = _mm256_set1_pd(row.north0);
  const __m256d v_up = _mm256_set1_pd(row.up);
  const __m256d v_half = _mm256_set1_pd(0.5);
  const __m256d v_start_north = _mm256_set1_pd(row.start_north);
  const double dxs = row.east - row.start_east;
  const __m256d v_dxs2 = _mm256_set1_pd(dxs * dxs);
  const __m256d v_inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());

  // Per-lane running minimum; lanes only ever see increasing indices, so a
  // strict comparison keeps the first index of each lane's minimum.
  __m256d best_obj = v_inf;
  __m256d best_idx = _mm256_set1_pd(-1.0);

  for (std::size_t i = 0; i < vec_end; i += kLanes) {
    const __m256d idx = lane_offsets(i);
    const __m256d north = _mm256_add_pd(v_north0, idx);
    __m256d feasible = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
    for (std::size_t u = 0; u < n_users; ++u) {
      const __m256d dx = _mm256_set1_pd(row.east - users.east[u]);
      const __m256d dy = _mm256_sub_pd(north, _mm256_set1_pd(users.north[u]));
      const __m256d dz = _mm256_set1_pd(row.up - users.up[u]);
      const __m256d d2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                        _mm256_mul_pd(dz, dz));
      feasible = _mm256_and_pd(feasible, _mm256_cmp_pd(d2, _mm256_set1_pd(users.radius_sq[u]), _CMP_LE_OQ));
      if (_mm256_movemask_pd(feasible) == 0) break;
    }
    if (_mm256_movemask_pd(feasible) == 0) continue;
    const __m256d dys = _mm256_sub_pd(north, v_start_north);
    const __m256d h = _mm256_sqrt_pd(_mm256_add_pd(v_dxs2, _mm256_mul_pd(dys, dys)));
    const __m256d objective = _mm256_blendv_pd(v_inf, _mm256_add_pd(v_up, _mm256_mul_pd(v_half, h)), feasible);
    const __m256d better = _mm256_and_pd(_mm256_cmp_pd(objective, best_obj, _CMP_LT_OQ), feasible);
    best_obj = _mm256_blendv_pd(best_obj, objective, better);
    best_idx = _mm256_blendv_pd(best_idx, idx, better);
  }

  alignas(32) double obj[kLanes];
  alignas(32) double idx[kLanes];
  _mm256_store_pd(obj, best_obj);
  _mm256_store_pd(idx, best_idx);

  RowBest best;
  for (std::size_t l = 0; l < kLanes; ++l) {
    if (idx[l] < 0.0) continue;
    const auto li = static_cast<std::ptrdiff_t>(idx[l]);
    if (best.index < 0 || obj[l] < best.objective || (obj[l] == best.objective && li < best.index)) {
      best.objective = obj[l];
      best.index = li;
    }
  }

  const RowBest tail = scalar::supply_row_best(row, users, vec_end, row.count);
  if (tail.index >= 0 && (best.index < 0 || tail.objective < best.objective)) best = tail;
  return best;
}

std::size_t count_inside_cylinder(std::span<const double> east, std::span<const double> north,
                                  std::span<const double> up, double center_east, double center_north,
                                  double radius, double height) {
  const std::size_t n = east.size();
  const std::size_t vec_end = n - n % kLanes;
  const __m256d ce = _mm256_set1_pd(center_east);
  const __m256d cn = _mm256_set1_pd(center_north);
  const __m256d r2 = _mm256_set1_pd(radius * radius);
  const __m256d h = _mm256_set1_pd(height);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < vec_end; i += kLanes) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(east.data() + i), ce);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(north.data() + i), cn);
    const __m256d d2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    const __m256d in_radius = _mm256_cmp_pd(d2, r2, _CMP_LT_OQ);
    const __m256d below = _mm256_cmp_pd(_mm256_loadu_pd(up.data() + i), h, _CMP_LT_OQ);
    inside += static_cast<std::size_t>(__builtin_popcount(
        static_cast<unsigned>(_mm256_movemask_pd(_mm256_and_pd(in_radius, below)))));
  }
  inside += scalar::count_inside_cylinder(east.subspan(vec_end), north.subspan(vec_end), up.subspan(vec_end),
                                          center_east, center_north, radius, height);
  return inside;
}

}  // namespace fluc::simd::avx2
