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

#ifndef LANEPILOT__CONTROLLERS_HPP_
#define LANEPILOT__CONTROLLERS_HPP_

#include "lanepilot/kinematics.hpp"

#include <array>
#include <cstddef>
#include <stdexcept>

namespace lanepilot::controllers
{

struct PidGains
{
  double k_p{0.0};
  double k_i{0.0};
  double k_d{0.0};
  double integral_clamp{10.0};  // m*s
  double output_clamp{4.0};     // m/s^2
};

/// Lateral gains used for lane changes and waypoint y tracking.
PidGains default_lateral_gains();
/// Gains for the longitudinal waypoint loop (error is the projected arrival miss).
PidGains default_longitudinal_gains();

void validate(const PidGains & gains);

/// Caller-owned controller memory.
struct PidState
{
  double integral{0.0};
  double previous_error{0.0};
  bool has_previous{false};

  /// Drops derivative memory so a setpoint jump does not produce a derivative kick.
  void retarget() { has_previous = false; }
};

/// Discrete PID: rectangle-rule integral (clamped), backward-difference derivative
/// (zero on the first sample after a reset or retarget), output clamped.
double pid_step(const PidGains & gains, PidState & state, double error, double dt);

struct IdmParams
{
  double min_gap{10.0};                     // s0, m
  double desired_velocity{130.0 / 3.6};     // m/s
  double max_acceleration{3.0};             // m/s^2
  double max_deceleration{5.0};             // m/s^2
  double safe_deceleration{4.0};            // m/s^2
  double time_headway{1.5};                 // s
};

void validate(const IdmParams & params);

/// s*(v, v_lead) = s0 + max(0, v*T + v*(v - v_lead) / (2*sqrt(a_max*b_safe))).
double desired_gap(const IdmParams & params, double v, double v_lead);

/// IDM acceleration clamped to [-b_max, a_max]. A non-positive gap means the vehicles
/// already overlap; the emergency brake -b_max is returned in that case.
/// An infinite gap drops the interaction term.
double idm_accel(const IdmParams & params, double v, double v_lead, double gap);

struct Waypoint
{
  double x{0.0};
  double y{0.0};
};

struct Acceleration
{
  double a_x{0.0};
  double a_y{0.0};
};

/// Drives the ego through a short list of timed waypoints with two independent PID loops.
/// Waypoint n is due n*spacing seconds after the plan was issued. The lateral loop sees
/// (waypoint.y - y). The longitudinal loop sees the miss at the due time if the current
/// speed were held, (waypoint.x - x - v_x * time_to_go). A waypoint is consumed when the
/// ego is within the capture radius or when its due time has passed.
class WaypointTracker
{
public:
  WaypointTracker(PidGains gains_x, PidGains gains_y, double spacing_s = 0.4,
                  double capture_radius = 0.5);

  template <std::size_t N>
  void set_plan(const std::array<Waypoint, N> & waypoints)
  {
    set_plan(waypoints.data(), N);
  }
  void set_plan(const Waypoint * waypoints, std::size_t count);

  /// Accelerations for this tick, then advances the internal clock by dt.
  /// Returns zero longitudinal command and holds the last lateral target once the
  /// plan is exhausted. Throws std::logic_error if no plan was ever set.
  Acceleration step(const kinematics::VehicleState & state, double dt);

  bool finished() const { return active_ >= count_; }
  std::size_t active_index() const { return active_; }
  std::size_t remaining() const { return finished() ? 0 : count_ - active_; }

private:
  void advance(const kinematics::VehicleState & state);

  PidGains gains_x_;
  PidGains gains_y_;
  PidState pid_x_;
  PidState pid_y_;
  double spacing_s_;
  double capture_radius_;
  std::array<Waypoint, 8> plan_{};
  std::size_t count_{0};
  std::size_t active_{0};
  double elapsed_{0.0};
  bool has_plan_{false};
};

/// One-shot form: fresh PID memory, plan issued now.
Acceleration track_waypoints(const kinematics::VehicleState & state,
                             const std::array<Waypoint, 3> & waypoints,
                             const PidGains & gains_x, const PidGains & gains_y, double dt);

}  // namespace lanepilot::controllers

#endif  // LANEPILOT__CONTROLLERS_HPP_
