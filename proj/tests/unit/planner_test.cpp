#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "fluc/planner.hpp"
#include "planner_oracles.hpp"

using namespace fluc::planner;
using fluc::geo::EnuPoint;

TEST(OptimizeOrder, SingleWaypoint) {
  const EnuPoint start{0, 0, 0};
  const std::vector<EnuPoint> wps{{3, 4, 0}};
  const Route r = optimize_order(start, wps);
  ASSERT_EQ(r.order, (std::vector<std::size_t>{0}));
  EXPECT_DOUBLE_EQ(r.total_length, 5.0);
  EXPECT_EQ(r.points.front(), start);
  EXPECT_EQ(r.points.back(), wps[0]);
}

TEST(OptimizeOrder, SquareCornersMatchBruteForce) {
  const EnuPoint start{0, 0, 0};
  const std::vector<EnuPoint> wps{{0, 100, 10}, {100, 100, 10}, {100, 0, 10}, {0, 0, 10}};
  const auto oracle = oracle::brute_force_order(start, wps);
  const Route r = optimize_order(start, wps);
  EXPECT_EQ(r.order, oracle.order);
  EXPECT_EQ(r.total_length, oracle.length);
  // Straight up to (0,0,10), then around three sides.
  EXPECT_EQ(r.order.front(), 3u);
  EXPECT_NEAR(r.total_length, 310.0, 1e-9);
}

TEST(OptimizeOrder, FiveRandomWaypointsMatchOracleOver200Seeds) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const auto wps = oracle::random_points(rng, 5);
    const EnuPoint start = oracle::random_points(rng, 1)[0];
    const auto expected = oracle::brute_force_order(start, wps);
    const Route r = optimize_order(start, wps);
    ASSERT_EQ(r.order, expected.order) << "seed " << seed;
    ASSERT_EQ(r.total_length, expected.length) << "seed " << seed;
  }
}

TEST(OptimizeOrder, TiesResolveToLexicographicallyFirstPermutation) {
  // Two identical waypoints: both orders tie, [0, 1] must win.
  const std::vector<EnuPoint> wps{{10, 0, 0}, {10, 0, 0}, {20, 0, 0}};
  EXPECT_EQ(optimize_order({0, 0, 0}, wps).order, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(OptimizeOrder, ExactResultNeverLongerThanRandomPermutations) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 7);  // 2..8
    const auto wps = oracle::random_points(rng, n);
    const EnuPoint start{0, 0, 0};
    const Route r = optimize_order(start, wps);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int k = 0; k < 50; ++k) {
      std::shuffle(perm.begin(), perm.end(), rng);
      ASSERT_LE(r.total_length, oracle::open_path_length(start, wps, perm) + 1e-9);
    }
  }
}

TEST(OptimizeOrder, TwoOptNeverWorseThanNearestNeighbour) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 9 + static_cast<std::size_t>(trial) * 2;  // 9..67 -> clamp
    const auto wps = oracle::random_points(rng, std::min<std::size_t>(n, kMaxWaypoints));
    const EnuPoint start{0, 0, 0};
    const Route r = optimize_order(start, wps);
    const auto nn = nearest_neighbor_order(start, wps);
    ASSERT_LE(r.total_length, oracle::open_path_length(start, wps, nn) + 1e-9);
    // Still a permutation.
    auto sorted = r.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) ASSERT_EQ(sorted[i], i);
  }
}

TEST(OptimizeOrder, StoredLengthMatchesRecomputation) {
  std::mt19937_64 rng(8);
  for (std::size_t n : {1u, 4u, 8u, 9u, 20u, 64u}) {
    const Route r = optimize_order({1, 2, 3}, oracle::random_points(rng, n));
    double sum = 0;
    for (std::size_t i = 1; i < r.points.size(); ++i) sum += oracle::distance(r.points[i - 1], r.points[i]);
    EXPECT_NEAR(r.total_length, sum, 1e-9 * std::max(1.0, sum));
  }
}

TEST(OptimizeOrder, Errors) {
  const std::vector<EnuPoint> none;
  try {
    optimize_order({0, 0, 0}, none);
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "Empty");
  }
  std::mt19937_64 rng(1);
  try {
    optimize_order({0, 0, 0}, oracle::random_points(rng, 65));
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "TooMany");
  }
}

TEST(RouteAround, NoObstaclesIsStraight) {
  const EnuPoint a{0, 0, 10}, b{100, 0, 10};
  EXPECT_EQ(route_around(a, b, {}), (std::vector<EnuPoint>{a, b}));
}

TEST(RouteAround, SingleCylinderDetour) {
  const EnuPoint a{0, 0, 10}, b{100, 0, 10};
  const std::vector<Obstacle> obs{{50, 0, 10, 50}};
  const auto route = route_around(a, b, obs, 5.0);
  ASSERT_EQ(route.size(), 3u);
  EXPECT_EQ(route.front(), a);
  EXPECT_EQ(route.back(), b);
  EXPECT_NEAR(route[1].east, 50.0, 1e-9);
  EXPECT_NEAR(std::abs(route[1].north), 15.75, 1e-9);
  EXPECT_NEAR(route[1].up, 10.0, 1e-9);
  EXPECT_GE(oracle::min_sampled_clearance(route, obs[0], 0.5), 15.0);
  EXPECT_EQ(oracle::violations(route, obs, 5.0, 0.5), 0u);
}

TEST(RouteAround, PassesOverShortObstacles) {
  const EnuPoint a{0, 0, 30}, b{100, 0, 30};
  const std::vector<Obstacle> obs{{50, 0, 10, 20}};
  EXPECT_EQ(route_around(a, b, obs, 5.0).size(), 2u);
  const std::vector<Obstacle> taller{{50, 0, 10, 26}};
  EXPECT_EQ(route_around(a, b, taller, 5.0).size(), 3u);
}

TEST(RouteAround, GoalInsideIsUnroutable) {
  const std::vector<Obstacle> obs{{50, 0, 10, 50}};
  for (const EnuPoint b : {EnuPoint{50, 0, 10}, EnuPoint{50, 13, 10}}) {
    try {
      route_around({0, 0, 10}, b, obs, 5.0);
      FAIL();
    } catch (const fluc::Error& e) {
      EXPECT_EQ(e.kind(), "Unroutable");
    }
  }
}

TEST(RouteAround, RejectsBadInputs) {
  EXPECT_THROW(route_around({0, 0, 0}, {1, 1, 1}, {}, -1.0), fluc::Error);
  const std::vector<Obstacle> bad{{0, 0, 0, 10}};
  EXPECT_THROW(route_around({20, 0, 0}, {30, 1, 1}, bad), fluc::Error);
}

TEST(RouteAroundProperty, RandomSingleObstacleInstancesStayClear) {
  std::mt19937_64 rng(2024);
  const auto instances = oracle::random_single_obstacle_instances(rng, 300);
  for (const auto& inst : instances) {
    const auto route = route_around(inst.a, inst.b, std::span(&inst.obstacle, 1), inst.margin);
    ASSERT_EQ(route.front(), inst.a);
    ASSERT_EQ(route.back(), inst.b);
    ASSERT_EQ(oracle::violations(route, {inst.obstacle}, inst.margin, 0.5), 0u);
  }
}

TEST(RouteAroundProperty, TwoObstaclesStayClearOrReportUnroutable) {
  std::mt19937_64 rng(77);
  int routed = 0;
  for (int i = 0; i < 300; ++i) {
    std::uniform_real_distribution<double> c(20, 180), r(3, 15), side(-60, 60);
    const std::vector<Obstacle> obs{{c(rng), side(rng) / 3, r(rng), 40}, {c(rng), side(rng) / 3, r(rng), 40}};
    const EnuPoint a{0, side(rng), 10}, b{200, side(rng), 10};
    try {
      const auto route = route_around(a, b, obs, 5.0);
      ++routed;
      ASSERT_EQ(oracle::violations(route, obs, 5.0, 0.5), 0u);
    } catch (const fluc::Error& e) {
      ASSERT_EQ(e.kind(), "Unroutable");
    }
  }
  EXPECT_GT(routed, 150);
}

TEST(DiagonalLeg, TwoHundredMeters) {
  const EnuPoint p = diagonal_leg(200.0);
  EXPECT_NEAR(p.east, 141.4214, 1e-4);
  EXPECT_NEAR(p.north, 141.4214, 1e-4);
  EXPECT_NEAR(p.east, 200.0 / std::sqrt(2.0), 1e-6);
  EXPECT_EQ(p.east, p.north);
  EXPECT_EQ(p.up, 0.0);
  EXPECT_NEAR(oracle::distance({0, 0, 0}, p), 200.0, 1e-9);
}

TEST(DiagonalLeg, NormEqualsDistance) {
  for (double d : {0.001, 1.0, 17.5, 200.0, 1e5}) EXPECT_NEAR(oracle::distance({0, 0, 0}, diagonal_leg(d)), d, 1e-9 * d);
}

TEST(DiagonalLeg, NonPositive) {
  for (double d : {0.0, -5.0}) {
    try {
      diagonal_leg(d);
      FAIL();
    } catch (const fluc::Error& e) {
      EXPECT_EQ(e.kind(), "NonPositive");
    }
  }
}
