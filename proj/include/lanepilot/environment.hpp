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

#ifndef LANEPILOT__ENVIRONMENT_HPP_
#define LANEPILOT__ENVIRONMENT_HPP_

#include "lanepilot/controllers.hpp"
#include "lanepilot/dataset_io.hpp"
#include "lanepilot/kinematics.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>

namespace lanepilot::env
{

/// Discrete meta-actions. The integer encoding is part of the checkpoint/log contract.
enum class MetaAction : int { LLC = 0, RLC = 1, LK = 2 };
inline constexpr int kActionCount = 3;
inline constexpr std::array<MetaAction, 3> kAllActions{MetaAction::LLC, MetaAction::RLC,
                                                       MetaAction::LK};

std::string_view to_string(MetaAction action);
std::optional<MetaAction> parse_action(std::string_view name);
MetaAction action_from_index(int index);
inline int to_index(MetaAction action) { return static_cast<int>(action); }
inline bool is_lane_change(MetaAction action) { return action != MetaAction::LK; }

class EnvError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Surrounding-vehicle slots, in observation order.
enum class Slot : int {
  FrontSame = 0, BackSame, FrontLeft, BackLeft, FrontRight, BackRight
};
inline constexpr std::size_t kSlotCount = 6;

struct SlotReading
{
  /// Bumper-to-bumper gap, clamped to [0, sentinel].
  double distance{dataset::kNoVehicleInSight};
  /// Absolute longitudinal speed of the slot vehicle.
  double velocity{0.0};
  bool present{false};

  bool operator==(const SlotReading &) const = default;
};

struct Observation
{
  kinematics::VehicleState ego;
  int lane_id{1};
  int lane_count{1};
  double road_y_min{0.0};
  double road_y_max{1.0};
  std::array<SlotReading, kSlotCount> slots{};
  double front_sight_distance{dataset::kNoVehicleInSight};
  double back_sight_distance{dataset::kNoVehicleInSight};
  double preceding_x_velocity{0.0};

  const SlotReading & slot(Slot s) const { return slots[static_cast<std::size_t>(s)]; }
  bool operator==(const Observation &) const = default;
};

/// Observation of an ego footprint among the given traffic rows. Slot lanes are chosen
/// from lane_of(ego.y) (clamped onto the road); a vehicle whose center is not behind
/// the ego center counts as "front".
Observation build_observation(const kinematics::VehicleState & ego, double ego_length,
                              double ego_width, std::span<const dataset::TrackRow> traffic,
                              const kinematics::LaneGeometry & lanes);

/// Network input layout, every entry clamped to [-1, 1]:
///   [0] v_x / v_max          [1] v_y / v_max
///   [2] lane_id / lane_count [3] y mapped from [y_min, y_max] onto [-1, 1]
///   [4 + 3k .. 6 + 3k] slot k: distance / 1000, velocity / v_max, present (k in Slot order)
///   [22] front sight / 1000  [23] back sight / 1000  [24] preceding v_x / v_max
inline constexpr std::size_t kObservationWidth = 25;
using ObservationVector = std::array<double, kObservationWidth>;
ObservationVector normalize(const Observation & obs, double v_max = 50.0);

struct RewardWeights
{
  double speed{1.0};
  double collision{10.0};
  double lane_change{0.1};
};

/// r = w_v * v_x / v_desired - w_c * [collided] - w_l * [action != LK].
double compute_reward(const Observation & prev, MetaAction action, const Observation & next,
                      bool collided, const RewardWeights & weights, double v_desired);

struct ControlConfig
{
  controllers::IdmParams idm;
  controllers::PidGains lateral{controllers::default_lateral_gains()};
  /// A lane change counts as finished once |y - target center| falls below this.
  double lane_capture_radius{0.5};
};

struct SimConfig
{
  double dt{0.04};
  /// Frames per episode, counted from the spawn frame.
  std::int64_t episode_frames{750};
  /// Frames between meta-decisions. The action is issued on the first frame and the
  /// remaining frames step with LK, relying on lane-change latching.
  int decision_period{10};
  double ego_length{4.5};
  double ego_width{1.8};
  double v_max{50.0};
  RewardWeights reward;
  ControlConfig control;
  std::uint64_t seed{0};
};

struct EpisodeSpec
{
  std::int64_t start_frame{0};
  int lane_id{2};
  double x{0.0};
  double v_x{25.0};
};

struct StepInfo
{
  std::int64_t frame{0};
  int target_lane{1};
  bool collided{false};
  bool road_exit{false};
  bool table_end{false};
  bool episode_limit{false};
  std::optional<std::int64_t> collided_with;
};

struct StepResult
{
  Observation observation;
  double reward{0.0};
  bool done{false};
  StepInfo info;
};

/// Episodic highway world. Traffic is replayed verbatim from the table; only the ego moves
/// under control. The action updates the latched target lane:
///   LLC -> target - 1 unless already moving left or at lane 1,
///   RLC -> target + 1 unless already moving right or at the last lane,
///   LK  -> unchanged (an in-progress change keeps going).
class HighwayEnv
{
public:
  HighwayEnv(std::shared_ptr<const dataset::TrackTable> table, SimConfig config);

  /// Throws EnvError if the spawn overlaps traffic or lies off the table.
  Observation reset(const EpisodeSpec & spec);

  /// Lane PID laterally, IDM longitudinally.
  StepResult step(MetaAction action);
  /// Caller-supplied accelerations (waypoint tracking); the target lane is still latched.
  StepResult step(MetaAction action, const controllers::Acceleration & command);

  Observation observe() const;

  const kinematics::VehicleState & ego() const { return ego_; }
  kinematics::BodyRect ego_body() const;
  std::int64_t frame() const { return frame_; }
  std::int64_t start_frame() const { return start_frame_; }
  int target_lane() const { return target_lane_; }
  bool done() const { return done_; }
  bool lane_change_in_progress() const;
  /// Target lane that step(action) would latch, without stepping.
  int preview_target(MetaAction action) const;
  int current_lane() const;
  std::span<const dataset::TrackRow> traffic() const { return table_->at_frame(frame_); }
  const kinematics::LaneGeometry & lanes() const { return table_->lanes(); }
  const SimConfig & config() const { return config_; }
  const dataset::TrackTable & table() const { return *table_; }

  /// Gap to and speed of the nearest vehicle ahead in the given lane (infinite gap if none).
  std::pair<double, double> leader_in_lane(int lane_id) const;

private:
  StepResult advance(MetaAction action, const std::optional<controllers::Acceleration> & command);
  void update_target(MetaAction action);

  std::shared_ptr<const dataset::TrackTable> table_;
  SimConfig config_;
  kinematics::VehicleState ego_;
  controllers::PidState lateral_pid_;
  std::int64_t frame_{0};
  std::int64_t start_frame_{0};
  int target_lane_{1};
  bool done_{true};
};

/// Outcome of one meta-decision: the action on the first frame, LK on the rest.
struct DecisionResult
{
  Observation observation;
  double reward{0.0};  // summed over the frames stepped
  bool done{false};
  bool collided{false};
  bool road_exit{false};
  int frames{0};
};

/// Steps up to config().decision_period frames, stopping early when the episode ends.
DecisionResult step_decision(HighwayEnv & env, MetaAction action);

}  // namespace lanepilot::env

#endif  // LANEPILOT__ENVIRONMENT_HPP_
