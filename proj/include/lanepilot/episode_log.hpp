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

#ifndef LANEPILOT__EPISODE_LOG_HPP_
#define LANEPILOT__EPISODE_LOG_HPP_

#include "lanepilot/controllers.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/kinematics.hpp"
#include "lanepilot/llm_planner.hpp"
#include "lanepilot/safety_arbiter.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lanepilot::experiments
{

enum class RunMode { RL_IDM, RL_LLM_TRAJECTORY, RL_IDM_LLM_SAFETY };
inline constexpr std::array<RunMode, 3> kAllModes{RunMode::RL_IDM, RunMode::RL_LLM_TRAJECTORY,
                                                  RunMode::RL_IDM_LLM_SAFETY};

std::string_view to_string(RunMode mode);
/// Column label used in metrics tables.
std::string_view display_name(RunMode mode);
std::optional<RunMode> parse_mode(std::string_view name);

class LogError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct TrafficBox
{
  std::int64_t id{0};
  double x{0.0};
  double y{0.0};
  double length{0.0};
  double width{0.0};

  bool operator==(const TrafficBox &) const = default;
};

/// One simulation frame. `ego` is the state after the step; `frame` is the frame reached.
struct StepRecord
{
  std::int64_t frame{0};
  env::MetaAction action{env::MetaAction::LK};
  /// Accelerations handed to the environment when waypoints were being tracked.
  std::optional<controllers::Acceleration> command;
  kinematics::VehicleState ego;
  int target_lane{1};
  double reward{0.0};
  bool collided{false};
  bool road_exit{false};

  bool operator==(const StepRecord & other) const;
};

struct PlanRecord
{
  env::MetaAction command{env::MetaAction::LK};
  std::uint64_t prompt_hash{0};
  planner::TrajectoryPrediction prediction;
  int retries{0};
  bool fallback{false};
  std::string fallback_reason;

  bool operator==(const PlanRecord &) const = default;
};

struct QueryRecord
{
  std::uint64_t prompt_hash{0};
  env::MetaAction action{env::MetaAction::LK};
  int retries{0};
  bool fallback{false};
  std::string fallback_reason;

  bool operator==(const QueryRecord &) const = default;
};

/// One meta-decision taken at `frame` from state `ego`.
struct DecisionRecord
{
  std::int64_t frame{0};
  kinematics::VehicleState ego;
  env::MetaAction rl_action{env::MetaAction::LK};
  env::MetaAction executed{env::MetaAction::LK};
  std::optional<safety::ArbiterDecision> arbiter;
  std::optional<QueryRecord> query;
  std::optional<PlanRecord> plan;
  std::vector<TrafficBox> traffic;
  /// Wall-clock seconds spent in the decision stack. Kept out of the JSONL log.
  double inference_s{0.0};

  /// Compares everything except inference_s.
  bool operator==(const DecisionRecord & other) const;
};

struct EpisodeLog
{
  RunMode mode{RunMode::RL_IDM};
  std::string scenario;
  std::uint64_t seed{0};
  std::string planner;
  double dt{0.04};
  int decision_period{10};
  double ego_length{4.5};
  double ego_width{1.8};
  std::vector<double> lane_boundaries;
  std::vector<double> lane_centers;
  env::EpisodeSpec start;
  kinematics::VehicleState initial;

  std::vector<StepRecord> steps;
  std::vector<DecisionRecord> decisions;

  bool collided{false};
  bool road_exit{false};
  std::optional<std::int64_t> collided_with;

  std::int64_t last_frame() const;
  /// Ego state at an absolute frame, or nullopt outside the recorded range.
  std::optional<kinematics::VehicleState> ego_at(std::int64_t frame) const;
  int collisions() const { return collided ? 1 : 0; }
  /// Mean ego v_x over the recorded steps, m/s.
  double mean_speed() const;

  bool operator==(const EpisodeLog & other) const;
};

/// JSONL: one header record, one record per decision and per step in frame order, then a
/// final record. Doubles use shortest round-trip form, so reading back is exact.
void write_log(std::ostream & out, const EpisodeLog & log);
void write_log(const std::filesystem::path & path, const EpisodeLog & log);
std::string format_log(const EpisodeLog & log);

EpisodeLog read_log(std::istream & in);
EpisodeLog read_log(const std::filesystem::path & path);

/// Per-decision wall-clock timings, one JSON line per decision: {"frame", "inference_s"}.
std::filesystem::path timing_path(const std::filesystem::path & log_path);
void write_timing(const std::filesystem::path & path, const EpisodeLog & log);
/// Fills inference_s from a timing sidecar. Missing decisions are left at 0.
void read_timing(const std::filesystem::path & path, EpisodeLog & log);

}  // namespace lanepilot::experiments

#endif  // LANEPILOT__EPISODE_LOG_HPP_
