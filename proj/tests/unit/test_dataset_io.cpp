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

#include "lanepilot/dataset_io.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace ds = lanepilot::dataset;
using lanepilot::testing::cruiser;
using lanepilot::testing::scratch_dir;

namespace
{

const char * kHeader =
  "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration,"
  "frontSightDistance,backSightDistance,precedingXVelocity,laneId\n";

ds::RecordingMeta three_lane_meta()
{
  ds::RecordingMeta m;
  m.lane_boundaries = {88.0, 92.0, 96.0, 100.0};
  m.lane_centers = {90.0, 94.0, 98.0};
  return m;
}

std::string expect_dataset_error(const std::string & csv)
{
  try {
    ds::parse_tracks(csv, three_lane_meta(), "tracks.csv");
  } catch (const ds::DatasetError & e) {
    return e.what();
  }
  ADD_FAILURE() << "no DatasetError for:\n" << csv;
  return {};
}

ds::ScenarioSpec ten_vehicle_spec()
{
  ds::ScenarioSpec spec;
  spec.duration = 120;
  spec.seed = 42;
  spec.random_traffic.count = 10;
  spec.random_traffic.x_max = 400.0;
  return spec;
}

}  // namespace

TEST(DatasetIo, MinimalTwoRowTable)
{
  const std::string csv = std::string(kHeader) +
                          "0,1,10,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n"
                          "1,1,10.8,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n";
  const ds::TrackTable t = ds::parse_tracks(csv, three_lane_meta());
  EXPECT_EQ(t.vehicle_count(), 1u);
  EXPECT_EQ(t.frame_count(), 2);
  EXPECT_DOUBLE_EQ(t.at_frame(1)[0].x, 10.8);
}

TEST(DatasetIo, ColumnOrderIsFree)
{
  const std::string csv =
    "id,frame,laneId,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration,"
    "frontSightDistance,backSightDistance,precedingXVelocity,extra\n"
    "7,0,2,5,94,4,2,10,0,0,0,1000,1000,0,zzz\n";
  const ds::TrackTable t = ds::parse_tracks(csv, three_lane_meta());
  ASSERT_EQ(t.rows().size(), 1u);
  EXPECT_EQ(t.rows()[0].vehicle_id, 7);
  EXPECT_EQ(t.rows()[0].lane_id, 2);
}

TEST(DatasetIo, FrameGapNamesVehicleAndFrame)
{
  const std::string msg = expect_dataset_error(
    std::string(kHeader) + "0,3,10,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n"
                           "2,3,11.6,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n");
  EXPECT_NE(msg.find("vehicle 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("frame 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gap"), std::string::npos) << msg;
}

TEST(DatasetIo, NonMonotoneFrames)
{
  const std::string msg = expect_dataset_error(
    std::string(kHeader) + "1,3,10,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n"
                           "0,3,11,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n");
  EXPECT_NE(msg.find("not strictly increasing"), std::string::npos) << msg;
}

TEST(DatasetIo, MissingColumnIsNamed)
{
  std::string header = kHeader;
  header.replace(header.find("xVelocity"), 9, "xSpeed");
  const std::string msg =
    expect_dataset_error(header + "0,1,10,90,4.5,1.8,20,0,0,0,1000,1000,0,1\n");
  EXPECT_NE(msg.find("xVelocity"), std::string::npos) << msg;
}

TEST(DatasetIo, NonNumericCellNamesLineAndColumn)
{
  const std::string msg = expect_dataset_error(
    std::string(kHeader) + "0,1,10,ninety,4.5,1.8,20,0,0,0,1000,1000,0,1\n");
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'y'"), std::string::npos) << msg;
}

TEST(DatasetIo, UndeclaredLaneRejected)
{
  const std::string msg = expect_dataset_error(
    std::string(kHeader) + "0,1,10,90,4.5,1.8,20,0,0,0,1000,1000,0,4\n");
  EXPECT_NE(msg.find("laneId 4"), std::string::npos) << msg;
}

TEST(DatasetIo, NegativeSightDistanceRejected)
{
  const std::string msg = expect_dataset_error(
    std::string(kHeader) + "0,1,10,90,4.5,1.8,20,0,0,0,-1,1000,0,1\n");
  EXPECT_NE(msg.find("sight"), std::string::npos) << msg;
}

TEST(DatasetIo, SynthConstantSpeedPositions)
{
  ds::ScenarioSpec spec;
  spec.duration = 3;
  spec.vehicles = {cruiser(1, 1, 0.0, 20.0)};
  const ds::TrackTable t = ds::synth_scenario(spec);
  ASSERT_EQ(t.rows().size(), 3u);
  EXPECT_NEAR(t.at_frame(0)[0].x, 0.0, 1e-12);
  EXPECT_NEAR(t.at_frame(1)[0].x, 0.8, 1e-12);
  EXPECT_NEAR(t.at_frame(2)[0].x, 1.6, 1e-12);
}

TEST(DatasetIo, SynthIsDeterministic)
{
  const ds::TrackTable a = ds::synth_scenario(ten_vehicle_spec());
  const ds::TrackTable b = ds::synth_scenario(ten_vehicle_spec());
  EXPECT_EQ(ds::format_tracks(a), ds::format_tracks(b));
  ds::ScenarioSpec other = ten_vehicle_spec();
  other.seed = 43;
  EXPECT_NE(ds::format_tracks(a), ds::format_tracks(ds::synth_scenario(other)));
}

TEST(DatasetIo, RoundTripThroughFiles)
{
  const ds::TrackTable original = ds::synth_scenario(ten_vehicle_spec());
  EXPECT_EQ(original.vehicle_count(), 10u);
  const auto dir = scratch_dir("dataset_roundtrip");
  ds::write_tracks(dir / "tracks.csv", original);
  ds::save_meta(dir / "meta.json", original.meta());
  const ds::RecordingMeta meta = ds::load_meta(dir / "meta.json");
  const ds::TrackTable loaded = ds::load_tracks(dir / "tracks.csv", meta);
  EXPECT_EQ(loaded, original);
}

TEST(DatasetIo, FiveVehicleLongScenarioPassesValidation)
{
  ds::ScenarioSpec spec;
  spec.duration = 500;
  spec.seed = 9;
  spec.random_traffic.count = 5;
  const ds::TrackTable t = ds::synth_scenario(spec);
  const ds::TrackTable again = ds::parse_tracks(ds::format_tracks(t), t.meta());
  EXPECT_EQ(again.frame_count(), 500);
  EXPECT_EQ(again.vehicle_count(), 5u);
}

TEST(DatasetIo, SynthObeysConstantAccelerationBound)
{
  ds::ScenarioSpec spec = ten_vehicle_spec();
  spec.vehicles = {cruiser(100, 2, 500.0, 25.0)};
  spec.vehicles[0].profile = {{10, -3.0}, {60, 1.0}};
  const ds::TrackTable t = ds::synth_scenario(spec);
  const double dt = t.meta().dt();
  for (std::int64_t f = 0; f + 1 < t.frame_count(); ++f) {
    for (const ds::TrackRow & r : t.at_frame(f)) {
      const auto next = t.at_frame(f + 1);
      const auto it = std::find_if(next.begin(), next.end(), [&](const ds::TrackRow & n) {
        return n.vehicle_id == r.vehicle_id;
      });
      ASSERT_NE(it, next.end());
      EXPECT_LE(std::abs(it->x - r.x - r.x_velocity * dt),
                0.5 * std::abs(r.x_acceleration) * dt * dt + 1e-6);
    }
  }
}

TEST(DatasetIo, RandomTrafficHonoursLanePool)
{
  ds::ScenarioSpec spec = ten_vehicle_spec();
  spec.random_traffic.lane_ids = {1, 3};
  const ds::TrackTable t = ds::synth_scenario(spec);
  for (const ds::TrackRow & r : t.rows()) {
    EXPECT_NE(r.lane_id, 2);
  }
  spec.random_traffic.lane_ids = {5};
  EXPECT_THROW(ds::synth_scenario(spec), ds::DatasetError);
}

TEST(DatasetIo, SynthRejectsOverlapAndBadSpecs)
{
  ds::ScenarioSpec spec;
  spec.vehicles = {cruiser(1, 2, 10.0, 20.0), cruiser(2, 2, 12.0, 20.0)};
  EXPECT_THROW(ds::synth_scenario(spec), ds::DatasetError);
  ds::ScenarioSpec one_lane;
  one_lane.lane_count = 1;
  EXPECT_THROW(ds::synth_scenario(one_lane), ds::DatasetError);
  ds::ScenarioSpec zero;
  zero.duration = 0;
  EXPECT_THROW(ds::synth_scenario(zero), ds::DatasetError);
}

TEST(DatasetIo, SightDistancesAreBumperGaps)
{
  ds::ScenarioSpec spec;
  spec.duration = 2;
  spec.vehicles = {cruiser(1, 2, 0.0, 25.0), cruiser(2, 2, 50.0, 20.0), cruiser(3, 1, 5.0, 30.0)};
  const ds::TrackTable t = ds::synth_scenario(spec);
  const auto rows = ds::frame_snapshot(t, 0);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0].front_sight_distance, 50.0 - 4.5, 1e-12);
  EXPECT_DOUBLE_EQ(rows[0].preceding_x_velocity, 20.0);
  EXPECT_DOUBLE_EQ(rows[0].back_sight_distance, ds::kNoVehicleInSight);
  EXPECT_NEAR(rows[1].back_sight_distance, 50.0 - 4.5, 1e-12);
  EXPECT_DOUBLE_EQ(rows[1].front_sight_distance, ds::kNoVehicleInSight);
  EXPECT_DOUBLE_EQ(rows[2].front_sight_distance, ds::kNoVehicleInSight);
}

TEST(DatasetIo, FrameSnapshotSortedAndRangeChecked)
{
  ds::ScenarioSpec spec;
  spec.duration = 5;
  spec.vehicles = {cruiser(9, 1, 0.0, 20.0), cruiser(4, 3, 0.0, 20.0)};
  const ds::TrackTable t = ds::synth_scenario(spec);
  const auto rows = ds::frame_snapshot(t, 0);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].vehicle_id, 4);
  EXPECT_EQ(rows[1].vehicle_id, 9);
  EXPECT_THROW(ds::frame_snapshot(t, 5), ds::DatasetError);
  EXPECT_THROW(ds::frame_snapshot(t, -1), ds::DatasetError);
}

TEST(DatasetIo, SnapshotUnionIsOriginalMultiset)
{
  const ds::TrackTable t = ds::synth_scenario(ten_vehicle_spec());
  std::map<std::pair<std::int64_t, std::int64_t>, int> seen;
  std::size_t total = 0;
  for (std::int64_t f = 0; f <= t.last_frame(); ++f) {
    for (const ds::TrackRow & r : ds::frame_snapshot(t, f)) {
      ++seen[{r.frame, r.vehicle_id}];
      ++total;
    }
  }
  EXPECT_EQ(total, t.rows().size());
  for (const ds::TrackRow & r : t.rows()) {
    EXPECT_EQ((seen[{r.frame, r.vehicle_id}]), 1);
  }
}

TEST(DatasetIo, MetaJsonRoundTrip)
{
  ds::RecordingMeta m = three_lane_meta();
  m.frame_rate = 30.0;
  m.frame_count = 77;
  const nlohmann::json j = m;
  EXPECT_EQ(j.at("frameRate"), 30.0);
  EXPECT_EQ(j.get<ds::RecordingMeta>(), m);
}
