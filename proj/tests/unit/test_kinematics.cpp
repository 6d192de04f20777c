// Copyright 2026 The lanepilot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lanepilot/kinematics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

namespace lp = lanepilot::kinematics;

TEST(Kinematics, ZeroAccelerationAdvancesPosition)
{
  lp::VehicleState s;
  s.x = 0.0;
  s.v_x = 10.0;
  s.y = 5.0;
  const lp::VehicleState n = lp::step_unicycle(s, 0.0, 0.0, 0.1);
  EXPECT_DOUBLE_EQ(n.x, 1.0);
  EXPECT_DOUBLE_EQ(n.y, 5.0);
  EXPECT_DOUBLE_EQ(n.v_x, 10.0);
}

TEST(Kinematics, LateralSubstitution)
{
  lp::VehicleState s;
  s.y = 10.0;
  s.v_y = 1.0;
  const lp::VehicleState n = lp::step_unicycle(s, 0.0, 2.0, 0.1);
  EXPECT_NEAR(n.y, 10.1, 1e-12);
  EXPECT_NEAR(n.v_y, 1.2, 1e-12);
  EXPECT_DOUBLE_EQ(n.a_y, 2.0);
  EXPECT_DOUBLE_EQ(n.a_x, 0.0);
}

TEST(Kinematics, PositionUsesVelocityBeforeUpdate)
{
  lp::VehicleState s;
  s.v_x = 3.0;
  const lp::VehicleState n = lp::step_unicycle(s, 100.0, 0.0, 0.5);
  EXPECT_DOUBLE_EQ(n.x, 1.5);
  EXPECT_DOUBLE_EQ(n.v_x, 53.0);
}

TEST(Kinematics, StepSizeRefinementMatchesClosedForm)
{
  const double a = 2.0;
  lp::VehicleState coarse;
  lp::VehicleState fine;
  for (int i = 0; i < 10; ++i) {
    coarse = lp::step_unicycle(coarse, a, 0.0, 0.1);
  }
  for (int i = 0; i < 100; ++i) {
    fine = lp::step_unicycle(fine, a, 0.0, 0.01);
  }
  EXPECT_NEAR(coarse.v_x, fine.v_x, 1e-9);
  // explicit Euler lags the exact 0.5 a t^2 by 0.5 a dt t
  const double t = 1.0;
  EXPECT_NEAR(coarse.x, 0.5 * a * t * t - 0.5 * a * 0.1 * t, 1e-9);
  EXPECT_NEAR(fine.x, 0.5 * a * t * t - 0.5 * a * 0.01 * t, 1e-9);
  EXPECT_LE(std::abs(fine.x - coarse.x), 0.5 * a * (0.1 * 0.1 - 0.01 * 0.01) * 10 + 1e-9);
}

TEST(Kinematics, SuperpositionOfStates)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int trial = 0; trial < 100; ++trial) {
    lp::VehicleState s1{u(rng), u(rng), u(rng), u(rng), 0.0, 0.0};
    lp::VehicleState s2{u(rng), u(rng), u(rng), u(rng), 0.0, 0.0};
    const double ax1 = u(rng), ay1 = u(rng), ax2 = u(rng), ay2 = u(rng);
    const lp::VehicleState sum{s1.x + s2.x, s1.y + s2.y, s1.v_x + s2.v_x, s1.v_y + s2.v_y, 0, 0};
    const auto a = lp::step_unicycle(s1, ax1, ay1, 0.04);
    const auto b = lp::step_unicycle(s2, ax2, ay2, 0.04);
    const auto c = lp::step_unicycle(sum, ax1 + ax2, ay1 + ay2, 0.04);
    EXPECT_NEAR(c.x, a.x + b.x, 1e-9);
    EXPECT_NEAR(c.y, a.y + b.y, 1e-9);
    EXPECT_NEAR(c.v_x, a.v_x + b.v_x, 1e-9);
    EXPECT_NEAR(c.v_y, a.v_y + b.v_y, 1e-9);
  }
}

TEST(Kinematics, RejectsNonFiniteInputAndBadStep)
{
  lp::VehicleState s;
  EXPECT_THROW(lp::step_unicycle(s, 0.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(lp::step_unicycle(s, 0.0, 0.0, -0.1), std::invalid_argument);
  EXPECT_THROW(lp::step_unicycle(s, std::nan(""), 0.0, 0.1), std::invalid_argument);
  s.v_x = std::numeric_limits<double>::infinity();
  EXPECT_THROW(lp::step_unicycle(s, 0.0, 0.0, 0.1), std::invalid_argument);
}

TEST(Kinematics, RectOverlapBasics)
{
  const lp::BodyRect a{0.0, 0.0, 5.0, 2.0};
  EXPECT_TRUE(lp::rect_overlap(a, a));
  EXPECT_FALSE(lp::rect_overlap(a, lp::BodyRect{100.0, 0.0, 5.0, 2.0}));
  // edge contact has zero area
  EXPECT_FALSE(lp::rect_overlap(a, lp::BodyRect{5.0, 0.0, 5.0, 2.0}));
  EXPECT_FALSE(lp::rect_overlap(a, lp::BodyRect{0.0, 2.0, 5.0, 2.0}));
  EXPECT_TRUE(lp::rect_overlap(a, lp::BodyRect{4.99, 1.99, 5.0, 2.0}));
}

TEST(Kinematics, RectOverlapMatchesIntervalOracle)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  std::uniform_real_distribution<double> size(0.5, 6.0);
  auto intervals_overlap = [](double lo1, double hi1, double lo2, double hi2) {
    return std::max(lo1, lo2) < std::min(hi1, hi2);
  };
  for (int i = 0; i < 1000; ++i) {
    const lp::BodyRect a{pos(rng), pos(rng), size(rng), size(rng)};
    const lp::BodyRect b{pos(rng), pos(rng), size(rng), size(rng)};
    const bool oracle =
      intervals_overlap(a.center_x - a.length / 2, a.center_x + a.length / 2,
                        b.center_x - b.length / 2, b.center_x + b.length / 2) &&
      intervals_overlap(a.center_y - a.width / 2, a.center_y + a.width / 2,
                        b.center_y - b.width / 2, b.center_y + b.width / 2);
    EXPECT_EQ(lp::rect_overlap(a, b), oracle);
    EXPECT_EQ(lp::rect_overlap(a, b), lp::rect_overlap(b, a));
  }
}

TEST(Kinematics, LongitudinalGapIsBumperToBumper)
{
  EXPECT_DOUBLE_EQ(lp::longitudinal_gap({0.0, 0.0, 4.0, 2.0}, {20.0, 0.0, 6.0, 2.0}), 15.0);
}

TEST(LaneGeometry, UniformSplitOfSeventyTwoToOneHundredFour)
{
  const auto g = lp::LaneGeometry::uniform(72.0, 104.0, 3);
  ASSERT_EQ(g.lane_count(), 3);
  for (int k = 1; k <= 3; ++k) {
    EXPECT_NEAR(g.lane_width(k), (104.0 - 72.0) / 3.0, 1e-12);
  }
  EXPECT_NEAR(g.lane_center(1), 72.0 + 32.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.y_min(), 72.0);
  EXPECT_DOUBLE_EQ(g.y_max(), 104.0);
}

TEST(LaneGeometry, LaneOfInvertsLaneCenter)
{
  const lp::LaneGeometry g({88.0, 92.0, 96.0, 100.0}, {90.0, 94.0, 98.0});
  for (int k = 1; k <= g.lane_count(); ++k) {
    EXPECT_EQ(g.lane_of(g.lane_center(k)), k);
  }
  EXPECT_EQ(g.lane_of(97.09), 3);
}

TEST(LaneGeometry, InteriorBoundaryGoesToLowerLane)
{
  const lp::LaneGeometry g({88.0, 92.0, 96.0, 100.0}, {90.0, 94.0, 98.0});
  const auto & b = g.boundaries();
  for (std::size_t i = 1; i + 1 < b.size(); ++i) {
    EXPECT_EQ(g.lane_of(b[i]), static_cast<int>(i));
    EXPECT_EQ(g.lane_of(std::nextafter(b[i], 1e9)), static_cast<int>(i) + 1);
  }
  EXPECT_EQ(g.lane_of(88.0), 1);
  EXPECT_EQ(g.lane_of(100.0), 3);
  EXPECT_FALSE(g.lane_of(87.999).has_value());
  EXPECT_FALSE(g.lane_of(100.001).has_value());
}

TEST(LaneGeometry, RejectsInvalidDeclarations)
{
  EXPECT_THROW(lp::LaneGeometry({0.0, 4.0}, {}), lp::LaneError);
  EXPECT_THROW(lp::LaneGeometry({0.0, 4.0, 3.0}, {2.0, 3.5}), lp::LaneError);
  EXPECT_THROW(lp::LaneGeometry({0.0, 4.0}, {5.0}), lp::LaneError);
  const lp::LaneGeometry g({0.0, 4.0}, {2.0});
  EXPECT_THROW(g.lane_center(0), lp::LaneError);
  EXPECT_THROW(g.lane_center(2), lp::LaneError);
}
