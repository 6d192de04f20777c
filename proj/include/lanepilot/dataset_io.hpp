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

#ifndef LANEPILOT__DATASET_IO_HPP_
#define LANEPILOT__DATASET_IO_HPP_

#include "lanepilot/kinematics.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lanepilot::dataset
{

/// Sight distance reported when no vehicle is in sight.
inline constexpr double kNoVehicleInSight = 1000.0;

/// Column subset read from highD-style tracks files, in write order.
inline constexpr const char * kTrackColumns[] = {
  "frame",      "id",         "x",
  "y",          "width",      "height",
  "xVelocity",  "yVelocity",  "xAcceleration",
  "yAcceleration", "frontSightDistance", "backSightDistance",
  "precedingXVelocity", "laneId"};

class DatasetError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// One vehicle at one frame. Follows the highD convention: x/y locate the box center here,
/// width is the box extent along x (vehicle length) and height its extent along y.
struct TrackRow
{
  std::int64_t frame{0};
  std::int64_t vehicle_id{0};
  double x{0.0};
  double y{0.0};
  double width{0.0};
  double height{0.0};
  double x_velocity{0.0};
  double y_velocity{0.0};
  double x_acceleration{0.0};
  double y_acceleration{0.0};
  double front_sight_distance{kNoVehicleInSight};
  double back_sight_distance{kNoVehicleInSight};
  double preceding_x_velocity{0.0};
  int lane_id{1};

  bool operator==(const TrackRow &) const = default;

  kinematics::BodyRect body() const { return {x, y, width, height}; }
};

struct RecordingMeta
{
  double frame_rate{25.0};
  std::vector<double> lane_boundaries;
  std::vector<double> lane_centers;
  /// Declared recording length. When absent the table ends at its last row.
  std::optional<std::int64_t> frame_count;

  double dt() const { return 1.0 / frame_rate; }
  kinematics::LaneGeometry lanes() const { return {lane_boundaries, lane_centers}; }

  bool operator==(const RecordingMeta &) const = default;
};

void to_json(nlohmann::json & j, const RecordingMeta & meta);
void from_json(const nlohmann::json & j, RecordingMeta & meta);

RecordingMeta load_meta(const std::filesystem::path & path);
void save_meta(const std::filesystem::path & path, const RecordingMeta & meta);

/// Validated, immutable trajectory table. Rows are stored sorted by (frame, vehicle_id).
class TrackTable
{
public:
  /// Validates every invariant and throws DatasetError naming the offending row.
  static TrackTable from_rows(std::vector<TrackRow> rows, RecordingMeta meta);

  const RecordingMeta & meta() const { return meta_; }
  const kinematics::LaneGeometry & lanes() const { return lanes_; }
  std::span<const TrackRow> rows() const { return rows_; }

  std::int64_t last_frame() const { return frame_count_ - 1; }
  std::int64_t frame_count() const { return frame_count_; }

  /// Rows present at a frame, sorted by vehicle_id. Empty for out-of-range frames.
  std::span<const TrackRow> at_frame(std::int64_t frame) const;

  std::vector<std::int64_t> vehicle_ids() const;
  std::size_t vehicle_count() const { return vehicle_ids().size(); }

  bool operator==(const TrackTable & other) const
  {
    return meta_ == other.meta_ && rows_ == other.rows_ && frame_count_ == other.frame_count_;
  }

private:
  RecordingMeta meta_;
  kinematics::LaneGeometry lanes_;
  std::vector<TrackRow> rows_;
  std::vector<std::size_t> frame_offsets_;
  std::int64_t frame_count_{0};
};

/// Reads a tracks CSV. Extra columns are ignored; the documented subset must be present.
TrackTable load_tracks(const std::filesystem::path & path, const RecordingMeta & meta);

/// Parses CSV text; source_name only labels error messages.
TrackTable parse_tracks(const std::string & text, const RecordingMeta & meta,
                        const std::string & source_name = "<memory>");

/// Writes the documented column subset with round-trip precision.
void write_tracks(const std::filesystem::path & path, const TrackTable & table);
std::string format_tracks(const TrackTable & table);

/// Rows at one frame sorted by vehicle_id. Throws DatasetError for frames outside the table.
std::vector<TrackRow> frame_snapshot(const TrackTable & table, std::int64_t frame);

// ---------------------------------------------------------------------------
// synthetic scenarios

/// Acceleration applied from start_frame until the next segment starts.
struct SpeedSegment
{
  std::int64_t start_frame{0};
  double acceleration{0.0};
};

struct VehicleBehavior
{
  std::int64_t id{0};
  int lane_id{1};
  double x0{0.0};
  double v0{0.0};
  double length{4.5};
  double width{1.8};
  std::vector<SpeedSegment> profile;
};

/// Extra vehicles drawn from the scenario seed.
struct RandomTraffic
{
  int count{0};
  double x_min{0.0};
  double x_max{300.0};
  double v_min{20.0};
  double v_max{33.0};
  double length{4.5};
  double width{1.8};
  /// Lanes the vehicles are drawn into; empty means every lane.
  std::vector<int> lane_ids;
};

struct ScenarioSpec
{
  int lane_count{3};
  double lane_width{4.0};
  /// y of the left road edge.
  double road_left_y{88.0};
  std::int64_t duration{250};
  double frame_rate{25.0};
  std::vector<VehicleBehavior> vehicles;
  RandomTraffic random_traffic;
  std::uint64_t seed{0};
};

RecordingMeta scenario_meta(const ScenarioSpec & spec);

/// Generates a table in which each vehicle follows constant-acceleration kinematics
/// between frames. Identical spec and seed produce identical tables.
/// Throws DatasetError on invalid specs or overlapping initial placements.
TrackTable synth_scenario(const ScenarioSpec & spec);

}  // namespace lanepilot::dataset

#endif  // LANEPILOT__DATASET_IO_HPP_
