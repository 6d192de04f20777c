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

#include "lanepilot/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace lanepilot::env
{

std::string_view to_string(MetaAction action)
{
  switch (action) {
    case MetaAction::LLC:
      return "LLC";
    case MetaAction::RLC:
      return "RLC";
    case MetaAction::LK:
      return "LK";
  }
  return "LK";
}

std::optional<MetaAction> parse_action(std::string_view name)
{
  for (MetaAction a : kAllActions) {
    if (to_string(a) == name) {
      return a;
    }
  }
  return std::nullopt;
}

MetaAction action_from_index(int index)
{
  if (index < 0 || index >= kActionCount) {
    throw std::out_of_range("meta-action index " + std::to_string(index));
  }
  return static_cast<MetaAction>(index);
}

namespace
{

int clamp_lane(const kinematics::LaneGeometry & lanes, double y)
{
  if (auto lane = lanes.lane_of(y)) {
    return *lane;
  }
  return y < lanes.y_min() ? 1 : lanes.lane_count();
}

// Fill the front/back slots for one lane.
void scan_lane(const kinematics::BodyRect & ego, std::span<const dataset::TrackRow> traffic,
               int lane, SlotReading & front, SlotReading & back)
{
  front = {};
  back = {};
  double best_front = std::numeric_limits<double>::infinity();
  double best_back = std::numeric_limits<double>::infinity();
  for (const dataset::TrackRow & row : traffic) {
    if (row.lane_id != lane) {
      continue;
    }
    if (row.x >= ego.center_x) {
      const double gap = kinematics::longitudinal_gap(ego, row.body());
      if (gap < best_front) {
        best_front = gap;
        front = {std::clamp(gap, 0.0, dataset::kNoVehicleInSight), row.x_velocity, true};
      }
    } else {
      const double gap = kinematics::longitudinal_gap(row.body(), ego);
      if (gap < best_back) {
        best_back = gap;
        back = {std::clamp(gap, 0.0, dataset::kNoVehicleInSight), row.x_velocity, true};
      }
    }
  }
}

double unit_clamp(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

Observation build_observation(const kinematics::VehicleState & ego, double ego_length,
                              double ego_width, std::span<const dataset::TrackRow> traffic,
                              const kinematics::LaneGeometry & lanes)
{
  Observation obs;
  obs.ego = ego;
  obs.lane_count = lanes.lane_count();
  obs.road_y_min = lanes.y_min();
  obs.road_y_max = lanes.y_max();
  obs.lane_id = clamp_lane(lanes, ego.y);
  const kinematics::BodyRect body{ego.x, ego.y, ego_length, ego_width};

  auto & s = obs.slots;
  scan_lane(body, traffic, obs.lane_id, s[0], s[1]);
  if (obs.lane_id > 1) {
    scan_lane(body, traffic, obs.lane_id - 1, s[2], s[3]);
  }
  if (obs.lane_id < obs.lane_count) {
    scan_lane(body, traffic, obs.lane_id + 1, s[4], s[5]);
  }
  obs.front_sight_distance = s[0].distance;
  obs.back_sight_distance = s[1].distance;
  obs.preceding_x_velocity = s[0].present ? s[0].velocity : 0.0;
  return obs;
}

ObservationVector normalize(const Observation & obs, double v_max)
{
  ObservationVector out{};
  const double span = obs.road_y_max - obs.road_y_min;
  out[0] = unit_clamp(obs.ego.v_x / v_max);
  out[1] = unit_clamp(obs.ego.v_y / v_max);
  out[2] = unit_clamp(static_cast<double>(obs.lane_id) / std::max(obs.lane_count, 1));
  out[3] = unit_clamp(span > 0.0 ? 2.0 * (obs.ego.y - obs.road_y_min) / span - 1.0 : 0.0);
  for (std::size_t k = 0; k < kSlotCount; ++k) {
    out[4 + 3 * k] = unit_clamp(obs.slots[k].distance / dataset::kNoVehicleInSight);
    out[5 + 3 * k] = unit_clamp(obs.slots[k].velocity / v_max);
    out[6 + 3 * k] = obs.slots[k].present ? 1.0 : 0.0;
  }
  out[22] = unit_clamp(obs.front_sight_distance / dataset::kNoVehicleInSight);
  out[23] = unit_clamp(obs.back_sight_distance / dataset::kNoVehicleInSight);
  out[24] = unit_clamp(obs.preceding_x_velocity / v_max);
  return out;
}

double compute_reward(const Observation & /*prev*/, MetaAction action, const Observation & next,
                      bool collided, const RewardWeights & w, double v_desired)
{
  double r = w.speed * (next.ego.v_x / v_desired);
  if (collided) {
    r -= w.collision;
  }
  if (action != MetaAction::LK) {
    r -= w.lane_change;
  }
  return r;
}

HighwayEnv::HighwayEnv(std::shared_ptr<const dataset::TrackTable> table, SimConfig config)
: table_(std::move(table)), config_(std::move(config))
{
  if (!table_) {
    throw EnvError("environment needs a track table");
  }
  if (!(config_.dt > 0.0) || std::abs(config_.dt - table_->meta().dt()) > 1e-9) {
    throw EnvError(
      "simulation dt " + std::to_string(config_.dt) + " does not match the table frame period " +
      std::to_string(table_->meta().dt()));
  }
  if (config_.episode_frames < 1 || config_.decision_period < 1) {
    throw EnvError("episode length and decision period must be positive");
  }
  controllers::validate(config_.control.idm);
  controllers::validate(config_.control.lateral);
}

kinematics::BodyRect HighwayEnv::ego_body() const
{
  return {ego_.x, ego_.y, config_.ego_length, config_.ego_width};
}

int HighwayEnv::current_lane() const { return clamp_lane(lanes(), ego_.y); }

bool HighwayEnv::lane_change_in_progress() const
{
  return std::abs(ego_.y - lanes().lane_center(target_lane_)) > config_.control.lane_capture_radius;
}

Observation HighwayEnv::reset(const EpisodeSpec & spec)
{
  if (spec.start_frame < 0 || spec.start_frame >= table_->last_frame()) {
    throw EnvError("spawn frame " + std::to_string(spec.start_frame) + " outside the table");
  }
  if (!lanes().has_lane(spec.lane_id)) {
    throw EnvError("spawn lane " + std::to_string(spec.lane_id) + " does not exist");
  }
  if (spec.v_x < 0.0 || !std::isfinite(spec.x) || !std::isfinite(spec.v_x)) {
    throw EnvError("spawn state must be finite with non-negative speed");
  }
  ego_ = {};
  ego_.x = spec.x;
  ego_.y = lanes().lane_center(spec.lane_id);
  ego_.v_x = spec.v_x;
  frame_ = spec.start_frame;
  start_frame_ = spec.start_frame;
  target_lane_ = spec.lane_id;
  lateral_pid_ = {};
  const kinematics::BodyRect body = ego_body();
  for (const dataset::TrackRow & row : traffic()) {
    if (kinematics::rect_overlap(body, row.body())) {
      throw EnvError("ego spawn overlaps vehicle " + std::to_string(row.vehicle_id));
    }
  }
  done_ = false;
  return observe();
}

Observation HighwayEnv::observe() const
{
  return build_observation(ego_, config_.ego_length, config_.ego_width, traffic(), lanes());
}

std::pair<double, double> HighwayEnv::leader_in_lane(int lane_id) const
{
  double gap = std::numeric_limits<double>::infinity();
  double v_lead = ego_.v_x;
  const kinematics::BodyRect body = ego_body();
  for (const dataset::TrackRow & row : traffic()) {
    if (row.lane_id != lane_id || row.x < ego_.x) {
      continue;
    }
    const double g = kinematics::longitudinal_gap(body, row.body());
    if (g < gap) {
      gap = g;
      v_lead = row.x_velocity;
    }
  }
  return {gap, v_lead};
}

int HighwayEnv::preview_target(MetaAction action) const
{
  const double target_y = lanes().lane_center(target_lane_);
  const bool in_progress = lane_change_in_progress();
  if (action == MetaAction::LLC) {
    const bool moving_left = in_progress && target_y < ego_.y;
    if (!moving_left && target_lane_ > 1) {
      return target_lane_ - 1;
    }
  } else if (action == MetaAction::RLC) {
    const bool moving_right = in_progress && target_y > ego_.y;
    if (!moving_right && target_lane_ < lanes().lane_count()) {
      return target_lane_ + 1;
    }
  }
  return target_lane_;
}

void HighwayEnv::update_target(MetaAction action)
{
  const int next = preview_target(action);
  if (next != target_lane_) {
    target_lane_ = next;
    lateral_pid_.retarget();
  }
}

StepResult HighwayEnv::step(MetaAction action) { return advance(action, std::nullopt); }

StepResult HighwayEnv::step(MetaAction action, const controllers::Acceleration & command)
{
  return advance(action, command);
}

StepResult HighwayEnv::advance(
  MetaAction action, const std::optional<controllers::Acceleration> & command)
{
  if (done_) {
    throw EnvError("step called on a finished episode");
  }
  const Observation prev = observe();
  update_target(action);

  double a_x = 0.0;
  double a_y = 0.0;
  if (command) {
    a_x = command->a_x;
    a_y = command->a_y;
  } else {
    // follow the closer of the leaders in the current and target lanes
    auto [gap, v_lead] = leader_in_lane(current_lane());
    if (target_lane_ != current_lane()) {
      auto [gap_t, v_lead_t] = leader_in_lane(target_lane_);
      if (gap_t < gap) {
        gap = gap_t;
        v_lead = v_lead_t;
      }
    }
    a_x = controllers::idm_accel(config_.control.idm, std::max(ego_.v_x, 0.0), v_lead, gap);
    const double error = lanes().lane_center(target_lane_) - ego_.y;
    a_y = controllers::pid_step(config_.control.lateral, lateral_pid_, error, config_.dt);
  }
  if (ego_.v_x + config_.dt * a_x < 0.0) {
    a_x = -ego_.v_x / config_.dt;
  }
  ego_ = kinematics::step_unicycle(ego_, a_x, a_y, config_.dt);
  ++frame_;

  StepResult result;
  result.info.frame = frame_;
  result.info.target_lane = target_lane_;
  const kinematics::BodyRect body = ego_body();
  for (const dataset::TrackRow & row : traffic()) {
    if (kinematics::rect_overlap(body, row.body())) {
      result.info.collided = true;
      result.info.collided_with = row.vehicle_id;
      break;
    }
  }
  result.info.road_exit = ego_.y < lanes().y_min() || ego_.y > lanes().y_max();
  result.info.table_end = frame_ >= table_->last_frame();
  result.info.episode_limit = frame_ - start_frame_ >= config_.episode_frames;
  result.done = result.info.collided || result.info.road_exit || result.info.table_end ||
                result.info.episode_limit;
  result.observation = observe();
  result.reward = compute_reward(
    prev, action, result.observation, result.info.collided || result.info.road_exit,
    config_.reward, config_.control.idm.desired_velocity);
  done_ = result.done;
  return result;
}

DecisionResult step_decision(HighwayEnv & env, MetaAction action)
{
  DecisionResult out;
  for (int k = 0; k < env.config().decision_period; ++k) {
    StepResult r = env.step(k == 0 ? action : MetaAction::LK);
    out.reward += r.reward;
    out.collided = out.collided || r.info.collided;
    out.road_exit = out.road_exit || r.info.road_exit;
    out.observation = std::move(r.observation);
    ++out.frames;
    if (r.done) {
      out.done = true;
      break;
    }
  }
  return out;
}

}  // namespace lanepilot::env
