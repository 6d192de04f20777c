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

#include <cmath>
#include <string>
#include <utility>

namespace lanepilot::kinematics
{

bool is_finite(const VehicleState & state)
{
  return std::isfinite(state.x) && std::isfinite(state.y) && std::isfinite(state.v_x) &&
         std::isfinite(state.v_y) && std::isfinite(state.a_x) && std::isfinite(state.a_y);
}

VehicleState step_unicycle(const VehicleState & state, double a_x, double a_y, double dt)
{
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("step_unicycle: dt must be finite and positive");
  }
  if (!is_finite(state) || !std::isfinite(a_x) || !std::isfinite(a_y)) {
    throw std::invalid_argument("step_unicycle: non-finite state or acceleration");
  }
  VehicleState next;
  next.y = state.y + dt * state.v_y;
  next.v_y = state.v_y + dt * a_y;
  next.x = state.x + dt * state.v_x;
  next.v_x = state.v_x + dt * a_x;
  next.a_x = a_x;
  next.a_y = a_y;
  return next;
}

bool rect_overlap(const BodyRect & a, const BodyRect & b)
{
  const double dx = std::abs(a.center_x - b.center_x);
  const double dy = std::abs(a.center_y - b.center_y);
  return dx < 0.5 * (a.length + b.length) && dy < 0.5 * (a.width + b.width);
}

double longitudinal_gap(const BodyRect & rear, const BodyRect & front)
{
  return (front.center_x - 0.5 * front.length) - (rear.center_x + 0.5 * rear.length);
}

LaneGeometry::LaneGeometry(std::vector<double> boundaries, std::vector<double> centers)
: boundaries_(std::move(boundaries)), centers_(std::move(centers))
{
  if (centers_.empty() || boundaries_.size() != centers_.size() + 1) {
    throw LaneError("lane geometry needs N centers and N+1 boundaries");
  }
  for (std::size_t i = 0; i + 1 < boundaries_.size(); ++i) {
    if (!(boundaries_[i] < boundaries_[i + 1])) {
      throw LaneError("lane boundaries must be strictly increasing");
    }
    if (!(centers_[i] > boundaries_[i] && centers_[i] < boundaries_[i + 1])) {
      throw LaneError("lane center " + std::to_string(i + 1) + " lies outside its band");
    }
  }
}

LaneGeometry LaneGeometry::uniform(double y_min, double y_max, int lane_count)
{
  if (lane_count < 1 || !(y_max > y_min)) {
    throw LaneError("uniform lane geometry needs y_max > y_min and at least one lane");
  }
  const double width = (y_max - y_min) / lane_count;
  std::vector<double> boundaries;
  std::vector<double> centers;
  for (int k = 0; k <= lane_count; ++k) {
    boundaries.push_back(k == lane_count ? y_max : y_min + k * width);
  }
  for (int k = 0; k < lane_count; ++k) {
    centers.push_back(0.5 * (boundaries[k] + boundaries[k + 1]));
  }
  return LaneGeometry(std::move(boundaries), std::move(centers));
}

double LaneGeometry::lane_center(int lane_id) const
{
  if (!has_lane(lane_id)) {
    throw LaneError("unknown lane id " + std::to_string(lane_id));
  }
  return centers_[static_cast<std::size_t>(lane_id - 1)];
}

double LaneGeometry::lane_width(int lane_id) const
{
  if (!has_lane(lane_id)) {
    throw LaneError("unknown lane id " + std::to_string(lane_id));
  }
  const auto k = static_cast<std::size_t>(lane_id);
  return boundaries_[k] - boundaries_[k - 1];
}

std::optional<int> LaneGeometry::lane_of(double y) const
{
  if (boundaries_.empty() || !(y >= y_min() && y <= y_max())) {
    return std::nullopt;
  }
  // first lane whose upper boundary is >= y; ties go to the lower index
  for (int k = 1; k <= lane_count(); ++k) {
    if (y <= boundaries_[static_cast<std::size_t>(k)]) {
      return k;
    }
  }
  return lane_count();
}

}  // namespace lanepilot::kinematics
