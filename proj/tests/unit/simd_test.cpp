#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "fluc/simd/kernels.hpp"
#include "fluc/supply.hpp"

using namespace fluc::simd;

namespace {

struct Users {
  std::vector<double> e, n, u, r2;
  UserSoA soa() const { return {e, n, u, r2}; }
};

Users random_users(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> xy(-40, 40), z(0, 5), r(20, 90);
  Users us;
  for (std::size_t i = 0; i < count; ++i) {
    us.e.push_back(xy(rng));
    us.n.push_back(xy(rng));
    us.u.push_back(z(rng));
    const double rr = r(rng);
    us.r2.push_back(rr * rr);
  }
  return us;
}

class IsaGuard {
 public:
  explicit IsaGuard(Isa isa) { force_isa(isa); }
  ~IsaGuard() { force_isa(std::nullopt); }
};

}  // namespace

TEST(SimdDispatch, ReportsAnIsa) {
  const Isa isa = active_isa();
  EXPECT_TRUE(isa == Isa::Scalar || isa == Isa::Avx2);
  {
    IsaGuard g(Isa::Scalar);
    EXPECT_EQ(active_isa(), Isa::Scalar);
  }
  EXPECT_EQ(active_isa(), isa);
}

#if defined(FLUC_HAVE_AVX2)

TEST(SimdEquivalence, SupplyRowBestMatchesScalarBitForBit) {
  if (detected_isa() != Isa::Avx2) GTEST_SKIP() << "CPU lacks AVX2";
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> coord(-120, 120), alt(5, 60);
  std::uniform_int_distribution<std::size_t> count(0, 37), users(1, 9);
  int feasible_rows = 0;
  for (int i = 0; i < 20000; ++i) {
    const Users us = random_users(rng, users(rng));
    GridRow row{std::floor(coord(rng)), std::floor(alt(rng)), std::floor(coord(rng)), count(rng) * 7,
                coord(rng), coord(rng)};
    if (i % 3 == 0) row.north0 += 0.37;  // non-integer lattice offsets too
    const RowBest s = scalar::supply_row_best(row, us.soa(), 0, row.count);
    const RowBest v = avx2::supply_row_best(row, us.soa());
    ASSERT_EQ(s.index, v.index) << "iteration " << i;
    if (s.index >= 0) {
      ++feasible_rows;
      ASSERT_EQ(s.objective, v.objective);
    }
  }
  EXPECT_GT(feasible_rows, 1000);
}

TEST(SimdEquivalence, TiesPickTheFirstIndex) {
  if (detected_isa() != Isa::Avx2) GTEST_SKIP() << "CPU lacks AVX2";
  // Start centred on the row: objective symmetric around index 5.
  const Users us{{0}, {0}, {0}, {1e9}};
  const GridRow row{0, 10, 0, 11, 0, 5};
  const RowBest s = scalar::supply_row_best(row, us.soa(), 0, row.count);
  const RowBest v = avx2::supply_row_best(row, us.soa());
  EXPECT_EQ(s.index, 5);
  EXPECT_EQ(v.index, 5);
  const GridRow tie{0, 10, 0, 12, 0, 5.5};  // indices 5 and 6 tie
  EXPECT_EQ(scalar::supply_row_best(tie, us.soa(), 0, tie.count).index, 5);
  EXPECT_EQ(avx2::supply_row_best(tie, us.soa()).index, 5);
}

TEST(SimdEquivalence, CylinderCountMatchesScalar) {
  if (detected_isa() != Isa::Avx2) GTEST_SKIP() << "CPU lacks AVX2";
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> c(-50, 50), up(0, 60);
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = static_cast<std::size_t>(i % 41);
    std::vector<double> e(n), no(n), u(n);
    for (std::size_t k = 0; k < n; ++k) e[k] = c(rng), no[k] = c(rng), u[k] = up(rng);
    const double r = std::abs(c(rng)), h = up(rng);
    ASSERT_EQ(scalar::count_inside_cylinder(e, no, u, 1.5, -2.0, r, h),
              avx2::count_inside_cylinder(e, no, u, 1.5, -2.0, r, h));
  }
}

TEST(SimdEquivalence, SupplyPlacementIdenticalUnderBothIsas) {
  if (detected_isa() != Isa::Avx2) GTEST_SKIP() << "CPU lacks AVX2";
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> xy(-60, 60), t(150, 420);
  for (int i = 0; i < 15; ++i) {
    std::vector<fluc::supply::GroundUser> gus;
    for (int k = 0; k < 1 + i % 4; ++k) gus.push_back({xy(rng), xy(rng), 0, t(rng)});
    const fluc::geo::EnuPoint start{xy(rng) * 5, xy(rng) * 5, 0};
    std::optional<fluc::supply::Placement> a, b;
    try {
      IsaGuard g(Isa::Scalar);
      a = fluc::supply::place(gus, start);
    } catch (const fluc::Error&) {
    }
    try {
      IsaGuard g(Isa::Avx2);
      b = fluc::supply::place(gus, start);
    } catch (const fluc::Error&) {
    }
    ASSERT_EQ(a.has_value(), b.has_value());
    if (a) {
      EXPECT_EQ(a->objective, b->objective);
      EXPECT_EQ(a->hover, b->hover);
    }
  }
}

#endif

TEST(ScalarKernel, CylinderBoundaryIsOutside) {
  const std::vector<double> e{10.0, 9.999, 0.0}, n{0.0, 0.0, 0.0}, u{5.0, 5.0, 20.0};
  EXPECT_EQ(count_inside_cylinder(e, n, u, 0, 0, 10, 20), 1u);
}
