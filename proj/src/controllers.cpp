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

#include "lanepilot/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lanepilot::controllers
{

PidGains default_lateral_gains()
{
  return {2.5, 0.02, 3.0, 10.0, 4.0};
}

PidGains default_longitudinal_gains()
{
  return {2.0, 0.0, 0.0, 10.0, 4.0};
}

void validate(const PidGains & gains)
{
  if (gains.k_p < 0.0 || gains.k_i < 0.0 || gains.k_d < 0.0) {
    throw std::invalid_argument("PID gains must be non-negative");
  }
  if (!(gains.integral_clamp > 0.0) || !(gains.output_clamp > 0.0)) {
    throw std::invalid_argument("PID clamps must be positive");
  }
}

double pid_step(const PidGains & gains, PidState & state, double error, double dt)
{
  if (!(dt > 0.0)) {
    throw std::invalid_argument("pid_step: dt must be positive");
  }
  state.integral =
    std::clamp(state.integral + error * dt, -gains.integral_clamp, gains.integral_clamp);
  const double derivative = state.has_previous ? (error - state.previous_error) / dt : 0.0;
  state.previous_error = error;
  state.has_previous = true;
  const double u = gains.k_p * error + gains.k_i * state.integral + gains.k_d * derivative;
  return std::clamp(u, -gains.output_clamp, gains.output_clamp);
}

void validate(const IdmParams & p)
{
  if (!(p.min_gap > 0.0) || !(p.desired_velocity > 0.0) || !(p.max_acceleration > 0.0) ||
      !(p.max_deceleration > 0.0) || !(p.safe_deceleration > 0.0) || !(p.time_headway > 0.0)) {
    throw std::invalid_argument("IDM parameters must be strictly positive");
  }
}

double desired_gap(const IdmParams & p, double v, double v_lead)
{
  const double dynamic =
    v * p.time_headway + v * (v - v_lead) / (2.0 * std::sqrt(p.max_acceleration * p.safe_deceleration));
  return p.min_gap + std::max(0.0, dynamic);
}

double idm_accel(const IdmParams & p, double v, double v_lead, double gap)
{
  if (v < 0.0 || std::isnan(v) || std::isnan(v_lead) || std::isnan(gap)) {
    throw std::invalid_argument("idm_accel: speed must be non-negative and inputs finite");
  }
  if (gap <= 0.0) {
    return -p.max_deceleration;
  }
  const double free_term = std::pow(v / p.desired_velocity, 4);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double ratio = desired_gap(p, v, v_lead) / gap;
    interaction = ratio * ratio;
  }
  const double a = p.max_acceleration * (1.0 - free_term - interaction);
  return std::clamp(a, -p.max_deceleration, p.max_acceleration);
}

WaypointTracker::WaypointTracker(
  PidGains gains_x, PidGains gains_y, double spacing_s, double capture_radius)
: gains_x_(gains_x), gains_y_(gains_y), spacing_s_(spacing_s), capture_radius_(capture_radius)
{
  validate(gains_x_);
  validate(gains_y_);
  if (!(spacing_s_ > 0.0) || !(capture_radius_ > 0.0)) {
    throw std::invalid_argument("waypoint spacing and capture radius must be positive");
  }
}

void WaypointTracker::set_plan(const Waypoint * waypoints, std::size_t count)
{
  if (count == 0) {
    throw std::invalid_argument("waypoint plan is empty");
  }
  if (count > plan_.size()) {
    throw std::invalid_argument("waypoint plan too long");
  }
  std::copy(waypoints, waypoints + count, plan_.begin());
  count_ = count;
  active_ = 0;
  elapsed_ = 0.0;
  has_plan_ = true;
  pid_x_.retarget();
  pid_y_.retarget();
}

void WaypointTracker::advance(const kinematics::VehicleState & state)
{
  while (active_ < count_) {
    const Waypoint & wp = plan_[active_];
    const double due = spacing_s_ * static_cast<double>(active_ + 1);
    const bool captured = std::hypot(wp.x - state.x, wp.y - state.y) <= capture_radius_;
    // small slack so a waypoint due exactly now is not dropped by rounding
    const bool overdue = elapsed_ >= due - 1e-9;
    if (!captured && !overdue) {
      break;
    }
    ++active_;
    pid_x_.retarget();
    pid_y_.retarget();
  }
}

Acceleration WaypointTracker::step(const kinematics::VehicleState & state, double dt)
{
  if (!has_plan_) {
    throw std::logic_error("WaypointTracker::step called before set_plan");
  }
  advance(state);
  Acceleration out;
  if (finished()) {
    out.a_y = pid_step(gains_y_, pid_y_, plan_[count_ - 1].y - state.y, dt);
  } else {
    const Waypoint & wp = plan_[active_];
    const double due = spacing_s_ * static_cast<double>(active_ + 1);
    const double time_to_go = std::max(due - elapsed_, dt);
    out.a_x = pid_step(gains_x_, pid_x_, wp.x - state.x - state.v_x * time_to_go, dt);
    out.a_y = pid_step(gains_y_, pid_y_, wp.y - state.y, dt);
  }
  elapsed_ += dt;
  return out;
}

Acceleration track_waypoints(const kinematics::VehicleState & state,
                             const std::array<Waypoint, 3> & waypoints,
                             const PidGains & gains_x, const PidGains & gains_y, double dt)
{
  WaypointTracker tracker(gains_x, gains_y);
  tracker.set_plan(waypoints);
  return tracker.step(state, dt);
}

}  // namespace lanepilot::controllers
