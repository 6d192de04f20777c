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

#ifndef LANEPILOT__KINEMATICS_HPP_
#define LANEPILOT__KINEMATICS_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

namespace lanepilot::kinematics
{

/// Point-mass ego state. x runs along the road and y across it. y grows to the right,
/// so a left lane change decreases y.
struct VehicleState
{
  double x{0.0};
  double y{0.0};
  double v_x{0.0};
  double v_y{0.0};
  double a_x{0.0};
  double a_y{0.0};

  bool operator==(const VehicleState &) const = default;
};

bool is_finite(const VehicleState & state);

/// One explicit Euler step of the per-axis unicycle model. Positions advance with the
/// old velocities, velocities with the commanded accelerations, and the returned
/// state carries the commanded accelerations.
/// Throws std::invalid_argument on dt <= 0 or non-finite input.
VehicleState step_unicycle(const VehicleState & state, double a_x, double a_y, double dt);

/// Axis-aligned vehicle footprint. length is measured along x, width along y.
struct BodyRect
{
  double center_x{0.0};
  double center_y{0.0};
  double length{0.0};
  double width{0.0};
};

/// True iff the two rectangles intersect with positive area. Touching edges do not count.
bool rect_overlap(const BodyRect & a, const BodyRect & b);

/// Longitudinal bumper-to-bumper gap between two footprints (negative when overlapping in x).
double longitudinal_gap(const BodyRect & rear, const BodyRect & front);

class LaneError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Lane bands across the road. Lane k (1-based) spans [boundaries[k-1], boundaries[k]],
/// lane 1 is the leftmost (smallest y).
class LaneGeometry
{
public:
  LaneGeometry() = default;
  LaneGeometry(std::vector<double> boundaries, std::vector<double> centers);

  /// Evenly split [y_min, y_max] into lane_count lanes with centers at the band middles.
  static LaneGeometry uniform(double y_min, double y_max, int lane_count);

  int lane_count() const { return static_cast<int>(centers_.size()); }
  double y_min() const { return boundaries_.front(); }
  double y_max() const { return boundaries_.back(); }
  bool has_lane(int lane_id) const { return lane_id >= 1 && lane_id <= lane_count(); }

  double lane_center(int lane_id) const;
  double lane_width(int lane_id) const;

  /// Lane whose band contains y. A y sitting exactly on an interior boundary belongs to
  /// the lower-indexed lane. Returns nullopt outside the road.
  std::optional<int> lane_of(double y) const;

  const std::vector<double> & boundaries() const { return boundaries_; }
  const std::vector<double> & centers() const { return centers_; }

private:
  std::vector<double> boundaries_;
  std::vector<double> centers_;
};

}  // namespace lanepilot::kinematics

#endif  // LANEPILOT__KINEMATICS_HPP_
