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

#ifndef LANEPILOT__EXPERIMENT_CONFIG_HPP_
#define LANEPILOT__EXPERIMENT_CONFIG_HPP_

#include "lanepilot/dqn_agent.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/llm_planner.hpp"
#include "lanepilot/safety_arbiter.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace lanepilot::experiments
{

class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig
{
  env::SimConfig sim;
  dqn::AgentConfig agent;
  int train_episodes{500};
  std::uint64_t train_seed{0};
  std::string scenario{"slow_leader_3lanes"};
  int eval_episodes{25};
  planner::PlannerEndpoint endpoint;
  planner::MockConfig mock;
  safety::ArbiterConfig arbiter;
  int knowledge_recordings{4};
  std::int64_t knowledge_stride{5};
  std::size_t neighbors{3};
};

/// JSON layout (every key optional, unknown keys rejected):
///   sim {dt, episode_frames, decision_period, ego_length, ego_width, v_max,
///        reward {speed, collision, lane_change}, lane_capture_radius}
///   idm {min_gap, desired_velocity, max_acceleration, max_deceleration, safe_deceleration,
///        time_headway}                      shared by the controller and the safety rule
///   lateral_pid {k_p, k_i, k_d, integral_clamp, output_clamp}
///   agent {gamma, epsilon {start, end, decay_steps}, batch_size, target_sync_period,
///          learning_rate, replay_capacity, hidden_layers, learning_starts, seed}
///   train {episodes, seed}   eval {episodes, scenario}
///   planner {base_url, path, model, api_key_env, timeout_s, retries, backoff_initial_s,
///            step_s, min_gap}
///   arbiter {front_gap_factor, cadence: "lane_change" | "every_decision"}
///   knowledge {recordings, stride, neighbors}
ExperimentConfig config_from_json(const nlohmann::json & j);
nlohmann::json config_to_json(const ExperimentConfig & config);

ExperimentConfig load_config(const std::filesystem::path & path);
void save_config(const std::filesystem::path & path, const ExperimentConfig & config);

}  // namespace lanepilot::experiments

#endif  // LANEPILOT__EXPERIMENT_CONFIG_HPP_
