#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fluc/supply.hpp"
#include "supply_oracles.hpp"

using namespace fluc::supply;
using fluc::geo::EnuPoint;

namespace {

// Closed form written out independently: natural logs, explicit constants.
double hand_rate_mbps(double d) {
  const double fspl = 20.0 * std::log(d) / std::log(10.0) + 20.0 * std::log(5.18e9) / std::log(10.0) - 147.55;
  const double snr_db = 20.0 + 5.0 - fspl + 85.0;
  const double snr = std::exp(snr_db / 10.0 * std::log(10.0));
  return 40e6 * std::log(1.0 + snr) / std::log(2.0) / 1e6;
}

const std::vector<GroundUser> kCaseStudy{{25, 50, 0, 200}, {50, 50, 0, 200}};

}  // namespace

TEST(AchievableRate, MatchesIndependentClosedFormAt100m) {
  const RadioModel radio;
  EXPECT_NEAR(achievable_rate(100.0, radio), hand_rate_mbps(100.0), 1e-9 * hand_rate_mbps(100.0));
  // Sanity of magnitude: ~23.3 dB SNR over 40 MHz.
  EXPECT_NEAR(achievable_rate(100.0, radio), 309.39, 0.01);
}

TEST(AchievableRate, ZeroDbSnrGivesBandwidth) {
  const RadioModel radio;
  // SNR = 0 dB where FSPL equals tx + gains - noise = 110 dB.
  const double d = std::pow(10.0, (110.0 - 20.0 * std::log10(5.18e9) + 147.55) / 20.0);
  EXPECT_NEAR(achievable_rate(d, radio), 40.0, 1e-9);
}

TEST(AchievableRate, StrictlyDecreasing) {
  const RadioModel radio;
  double prev = achievable_rate(0.1, radio);
  for (double d = 0.2; d < 50000.0; d *= 1.05) {
    const double r = achievable_rate(d, radio);
    ASSERT_LT(r, prev) << d;
    prev = r;
  }
}

TEST(AchievableRate, NonPositiveDistance) {
  try {
    achievable_rate(0.0, RadioModel{});
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "NonPositiveDistance");
  }
}

TEST(MaxLinkDistance, RoundTripsThroughTheRate) {
  const RadioModel radio;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> t(1.0, 1100.0);
  for (int i = 0; i < 500; ++i) {
    const double traffic = t(rng);
    const double d = max_link_distance(traffic, radio);
    ASSERT_NEAR(achievable_rate(d, radio), traffic, 0.01) << traffic;
    ASSERT_GE(achievable_rate(d, radio), traffic);
  }
}

TEST(MaxLinkDistance, LargerDemandShorterReach) {
  const RadioModel radio;
  double prev = max_link_distance(10.0, radio);
  for (double t = 20.0; t < 1100.0; t += 10.0) {
    const double d = max_link_distance(t, radio);
    ASSERT_LT(d, prev);
    prev = d;
  }
}

TEST(MaxLinkDistance, MatchesMillimetreScanAt200Mbps) {
  const RadioModel radio;
  // Scan oracle: last millimetre step that still meets 200 Mbit/s.
  double last_ok = 0.0;
  for (long mm = 100; mm < 400000; ++mm) {
    const double d = static_cast<double>(mm) * 1e-3;
    if (hand_rate_mbps(d) >= 200.0)
      last_ok = d;
    else
      break;
  }
  ASSERT_GT(last_ok, 200.0);
  EXPECT_NEAR(max_link_distance(200.0, radio), last_ok, 1e-3);
}

TEST(MaxLinkDistance, Infeasible) {
  try {
    max_link_distance(5000.0, RadioModel{});
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "Infeasible");
  }
}

TEST(SupplyWaypoints, SingleUserHoversOverheadAtMinimumAltitude) {
  const std::vector<GroundUser> gus{{0, 0, 0, 50}};
  const auto wps = supply_waypoints(gus, {0, 0, 0});
  ASSERT_EQ(wps.size(), 2u);
  EXPECT_EQ(wps[1], (EnuPoint{0, 0, 5}));
  EXPECT_EQ(wps[0], (EnuPoint{0, 0, 5}));
}

TEST(SupplyWaypoints, CaseStudyMatchesExhaustiveOracle) {
  const RadioModel radio;
  const EnuPoint start{0, 0, 0};
  const Placement p = place(kCaseStudy, start, radio);
  const auto report = qos_report(p.hover, kCaseStudy, radio);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_TRUE(report[0].satisfied && report[1].satisfied);
  EXPECT_GE(report[0].rate_mbps, 200.0);
  EXPECT_GE(report[1].rate_mbps, 200.0);

  const auto oracle = oracle::exhaustive_supply(kCaseStudy, start, radio);
  ASSERT_TRUE(oracle.found);
  EXPECT_EQ(p.objective, oracle.objective);
  EXPECT_EQ(p.hover, oracle.point);
  EXPECT_EQ(p.objective, energy_proxy(p.hover, start));
  // Start lies inside both feasibility spheres, so the optimum is straight up.
  EXPECT_EQ(p.hover, (EnuPoint{0, 0, 5}));
  ASSERT_EQ(p.waypoints.size(), 2u);
  EXPECT_EQ(p.waypoints[0], (EnuPoint{0, 0, 5}));
}

TEST(SupplyWaypoints, DistantStartMatchesExhaustiveOracle) {
  const RadioModel radio;
  for (const EnuPoint start : {EnuPoint{-700, 300, 0}, EnuPoint{400.5, -333.25, 12}, EnuPoint{37.5, 50.5, 0}}) {
    const Placement p = place(kCaseStudy, start, radio);
    const auto o = oracle::exhaustive_supply(kCaseStudy, start, radio);
    EXPECT_EQ(p.objective, o.objective);
    EXPECT_EQ(p.hover, o.point);
    EXPECT_EQ(p.waypoints[0], (EnuPoint{start.east, start.north, p.hover.up}));
  }
}

TEST(SupplyWaypoints, UsersTooFarApartAreInfeasible) {
  const RadioModel radio;
  const double r = max_link_distance(300.0, radio);
  const std::vector<GroundUser> gus{{0, 0, 0, 300}, {2.0 * r + 10.0, 0, 0, 300}};
  try {
    place(gus, {0, 0, 0}, radio);
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "InfeasibleQoS");
  }
}

TEST(SupplyWaypoints, DemandAboveShortRangeLimitIsInfeasibleQoS) {
  const std::vector<GroundUser> gus{{0, 0, 0, 5000}};
  try {
    place(gus, {0, 0, 0});
    FAIL();
  } catch (const fluc::Error& e) {
    EXPECT_EQ(e.kind(), "InfeasibleQoS");
  }
}

TEST(SupplyWaypoints, InvalidInputs) {
  EXPECT_THROW(place(std::vector<GroundUser>{}, {0, 0, 0}), fluc::Error);
  EXPECT_THROW(place(std::vector<GroundUser>{{0, 0, -1, 10}}, {0, 0, 0}), fluc::Error);
  EXPECT_THROW(place(std::vector<GroundUser>{{0, 0, 0, 0}}, {0, 0, 0}), fluc::Error);
  EXPECT_THROW(place(std::vector<GroundUser>(33, GroundUser{0, 0, 0, 10}), {0, 0, 0}), fluc::Error);
}

TEST(SupplyProperty, RandomInstancesMatchOracleAndSatisfyQos) {
  const RadioModel radio;
  std::mt19937_64 rng(31);
  int checked = 0;
  while (checked < 20) {
    const auto gus = oracle::random_gus(rng, 1 + static_cast<std::size_t>(checked % 4), 380, 470);
    const EnuPoint start{std::uniform_real_distribution<double>(-80, 80)(rng), 40, 0};
    const auto o = oracle::exhaustive_supply(gus, start, radio);
    if (!o.found) {
      EXPECT_THROW(place(gus, start, radio), fluc::Error);
      continue;
    }
    const Placement p = place(gus, start, radio);
    ASSERT_EQ(p.objective, o.objective);
    ASSERT_EQ(p.hover, o.point);
    ASSERT_TRUE(all_satisfied(qos_report(p.hover, gus, radio)));
    ++checked;
  }
}

TEST(SupplyProperty, ShrinkingDemandNeverRaisesTheObjective) {
  const RadioModel radio;
  std::mt19937_64 rng(37);
  int pairs = 0;
  for (int i = 0; i < 200 && pairs < 60; ++i) {
    auto gus = oracle::random_gus(rng, 2 + static_cast<std::size_t>(i % 3), 250, 450);
    const EnuPoint start{200, -150, 0};
    double before = 0;
    try {
      before = place(gus, start, radio).objective;
    } catch (const fluc::Error&) {
      continue;
    }
    const std::size_t k = static_cast<std::size_t>(i) % gus.size();
    gus[k].traffic *= std::uniform_real_distribution<double>(0.3, 0.99)(rng);
    const double after = place(gus, start, radio).objective;
    ASSERT_LE(after, before);
    ++pairs;
  }
  EXPECT_GE(pairs, 30);
}

TEST(QosReport, Definitions) {
  const RadioModel radio;
  const Placement p = place(kCaseStudy, {0, 0, 0}, radio);
  EXPECT_TRUE(all_satisfied(qos_report(p.hover, kCaseStudy, radio)));

  const auto far = qos_report({1e6, 0, 10}, kCaseStudy, radio);
  for (const auto& q : far) EXPECT_FALSE(q.satisfied);

  const EnuPoint at{10, 20, 30};
  const auto rep = qos_report(at, kCaseStudy, radio);
  for (std::size_t i = 0; i < kCaseStudy.size(); ++i) {
    const auto& g = kCaseStudy[i];
    const double d = std::sqrt((10 - g.x) * (10 - g.x) + (20 - g.y) * (20 - g.y) + (30 - g.z) * (30 - g.z));
    EXPECT_DOUBLE_EQ(rep[i].distance_m, d);
    EXPECT_EQ(rep[i].rate_mbps, achievable_rate(rep[i].distance_m, radio));
    EXPECT_EQ(rep[i].satisfied, rep[i].rate_mbps >= g.traffic);
  }
}
