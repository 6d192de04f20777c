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

#ifndef LANEPILOT__EXPERIMENTS_HPP_
#define LANEPILOT__EXPERIMENTS_HPP_

#include "lanepilot/dqn_agent.hpp"
#include "lanepilot/episode_log.hpp"
#include "lanepilot/experiment_config.hpp"
#include "lanepilot/llm_planner.hpp"
#include "lanepilot/neural.hpp"
#include "lanepilot/retrieval.hpp"
#include "lanepilot/safety_arbiter.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lanepilot::experiments
{

/// Meta-action chooser fed with the normalized observation.
using RlPolicy = std::function<env::MetaAction(const env::ObservationVector &)>;

/// Greedy policy over a frozen copy of the network.
RlPolicy network_policy(const neural::Mlp & net);
RlPolicy constant_policy(env::MetaAction action);
/// Replays a fixed action list, then LK.
RlPolicy scripted_policy(std::vector<env::MetaAction> actions);

/// Modules wired into an episode. Pointers are borrowed and may be null when the mode does
/// not use them; run_episode throws std::invalid_argument if a required one is missing.
struct ModeStack
{
  RlPolicy policy;
  const retrieval::KnnIndex * index{nullptr};
  std::size_t neighbors{3};
  planner::TrajectoryPlanner * planner{nullptr};
  safety::ActionAdvisor * advisor{nullptr};
  safety::QueryCadence cadence{safety::QueryCadence::OnLaneChange};
  controllers::PidGains tracker_x{controllers::default_longitudinal_gains()};
  controllers::PidGains tracker_y{controllers::default_lateral_gains()};
  double planner_step_s{planner::kDefaultStepSeconds};
};

struct EpisodeRequest
{
  RunMode mode{RunMode::RL_IDM};
  std::string scenario;
  std::uint64_t seed{0};
  dqn::EpisodeSetup setup;
};

/// Per mode:
///   RL_IDM             policy action, IDM + lane PID execution
///   RL_LLM_TRAJECTORY  policy action -> retrieval -> planner waypoints -> waypoint tracker
///   RL_IDM_LLM_SAFETY  policy action gated by consensus, IDM + lane PID execution
/// Decisions happen every decision_period frames; the decision action is applied on the
/// first frame of the period and LK on the rest.
EpisodeLog run_episode(const EpisodeRequest & request, const ModeStack & stack);

/// Neighbors for an observation (empty without an index).
std::vector<retrieval::KnowledgeRecord> retrieve_neighbors(const retrieval::KnnIndex * index,
                                                           const env::Observation & obs,
                                                           const kinematics::LaneGeometry & lanes,
                                                           std::size_t k);

/// Runs every (mode, seed) pair of the named scenario, modes outermost.
std::vector<EpisodeLog> run_sweep(std::span<const RunMode> modes, std::string_view scenario,
                                  std::span<const std::uint64_t> seeds, const env::SimConfig & sim,
                                  const ModeStack & stack);

struct PlannerBackends
{
  std::unique_ptr<planner::TrajectoryPlanner> planner;
  std::unique_ptr<safety::ActionAdvisor> advisor;
};

/// kind is "mock" or "live"; throws std::invalid_argument otherwise.
PlannerBackends make_backends(std::string_view kind, const ExperimentConfig & config);

struct ModeMetrics
{
  RunMode mode{RunMode::RL_IDM};
  int runs{0};
  double collisions_per_run{0.0};
  double velocity_kmh{0.0};
  double inference_s{0.0};
  int road_exits{0};
  std::vector<std::uint64_t> seeds;
};

struct MetricsReport
{
  /// Modes present in the logs, in RunMode order.
  std::vector<ModeMetrics> modes;

  const ModeMetrics * find(RunMode mode) const;
};

/// Per mode: mean collisions per run, time-weighted mean ego v_x in km/h, mean decision
/// inference time. Safety-mode inference averages the decisions that consulted the advisor
/// (all decisions when none did). Results do not depend on the order of `logs`.
MetricsReport aggregate_metrics(std::span<const EpisodeLog> logs);

/// Rows: Collision No, Velocity (km/h), Inference Time (s), Runs. One column per mode.
std::string format_metrics_csv(const MetricsReport & report);
std::string format_metrics_table(const MetricsReport & report);

struct WaypointError
{
  std::int64_t decision_frame{0};
  std::size_t waypoint{0};
  double error{0.0};
};

struct TrajectoryComparison
{
  std::vector<WaypointError> errors;
  std::size_t skipped{0};
  double mean_error{0.0};
  double max_error{0.0};
};

/// Distance between waypoint n of each plan and the ego position n * frames_per_waypoint
/// frames after the decision. Waypoints past the end of the log are skipped and counted.
TrajectoryComparison compare_trajectories(const EpisodeLog & log, int frames_per_waypoint = 10);

struct ReplayResult
{
  bool identical{true};
  std::int64_t first_mismatch_frame{-1};
  std::string detail;
};

/// Feeds the recorded per-step actions and commands through a fresh environment and compares
/// every recorded state bit-for-bit.
ReplayResult replay_log(const EpisodeLog & log, const dqn::EpisodeSetup & setup);

}  // namespace lanepilot::experiments

#endif  // LANEPILOT__EXPERIMENTS_HPP_
