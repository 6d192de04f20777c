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

#include "lanepilot/experiment_config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

namespace lanepilot::experiments
{

namespace
{

using nlohmann::json;

void check_keys(const json & j, std::string_view where,
                std::initializer_list<std::string_view> allowed)
{
  if (!j.is_object()) {
    throw ConfigError(std::string(where) + " must be an object");
  }
  for (const auto & item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json & j, const char * key, T & out)
{
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception & e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

const json & section(const json & root, const char * key)
{
  static const json kEmpty = json::object();
  return root.contains(key) ? root.at(key) : kEmpty;
}

}  // namespace

ExperimentConfig config_from_json(const json & root)
{
  check_keys(root, "config",
             {"sim", "idm", "lateral_pid", "agent", "train", "eval", "planner", "arbiter",
              "knowledge"});
  ExperimentConfig c;

  const json & sim = section(root, "sim");
  check_keys(sim, "sim",
             {"dt", "episode_frames", "decision_period", "ego_length", "ego_width", "v_max",
              "reward", "lane_capture_radius"});
  read(sim, "dt", c.sim.dt);
  read(sim, "episode_frames", c.sim.episode_frames);
  read(sim, "decision_period", c.sim.decision_period);
  read(sim, "ego_length", c.sim.ego_length);
  read(sim, "ego_width", c.sim.ego_width);
  read(sim, "v_max", c.sim.v_max);
  read(sim, "lane_capture_radius", c.sim.control.lane_capture_radius);
  const json & reward = section(sim, "reward");
  check_keys(reward, "sim.reward", {"speed", "collision", "lane_change"});
  read(reward, "speed", c.sim.reward.speed);
  read(reward, "collision", c.sim.reward.collision);
  read(reward, "lane_change", c.sim.reward.lane_change);

  const json & idm = section(root, "idm");
  check_keys(idm, "idm",
             {"min_gap", "desired_velocity", "max_acceleration", "max_deceleration",
              "safe_deceleration", "time_headway"});
  controllers::IdmParams & p = c.sim.control.idm;
  read(idm, "min_gap", p.min_gap);
  read(idm, "desired_velocity", p.desired_velocity);
  read(idm, "max_acceleration", p.max_acceleration);
  read(idm, "max_deceleration", p.max_deceleration);
  read(idm, "safe_deceleration", p.safe_deceleration);
  read(idm, "time_headway", p.time_headway);
  controllers::validate(p);
  c.arbiter.rule.idm = p;
  c.mock.min_gap = p.min_gap;

  const json & pid = section(root, "lateral_pid");
  check_keys(pid, "lateral_pid", {"k_p", "k_i", "k_d", "integral_clamp", "output_clamp"});
  controllers::PidGains & g = c.sim.control.lateral;
  read(pid, "k_p", g.k_p);
  read(pid, "k_i", g.k_i);
  read(pid, "k_d", g.k_d);
  read(pid, "integral_clamp", g.integral_clamp);
  read(pid, "output_clamp", g.output_clamp);
  controllers::validate(g);

  const json & agent = section(root, "agent");
  check_keys(agent, "agent",
             {"gamma", "epsilon", "batch_size", "target_sync_period", "learning_rate",
              "replay_capacity", "hidden_layers", "learning_starts", "seed"});
  read(agent, "gamma", c.agent.gamma);
  read(agent, "batch_size", c.agent.batch_size);
  read(agent, "target_sync_period", c.agent.target_sync_period);
  read(agent, "learning_rate", c.agent.learning_rate);
  read(agent, "replay_capacity", c.agent.replay_capacity);
  read(agent, "hidden_layers", c.agent.hidden_layers);
  read(agent, "learning_starts", c.agent.learning_starts);
  read(agent, "seed", c.agent.seed);
  const json & eps = section(agent, "epsilon");
  check_keys(eps, "agent.epsilon", {"start", "end", "decay_steps"});
  read(eps, "start", c.agent.epsilon.start);
  read(eps, "end", c.agent.epsilon.end);
  read(eps, "decay_steps", c.agent.epsilon.decay_steps);
  dqn::validate(c.agent);

  const json & train = section(root, "train");
  check_keys(train, "train", {"episodes", "seed"});
  read(train, "episodes", c.train_episodes);
  read(train, "seed", c.train_seed);

  const json & eval = section(root, "eval");
  check_keys(eval, "eval", {"episodes", "scenario"});
  read(eval, "episodes", c.eval_episodes);
  read(eval, "scenario", c.scenario);

  const json & pl = section(root, "planner");
  check_keys(pl, "planner",
             {"base_url", "path", "model", "api_key_env", "timeout_s", "retries",
              "backoff_initial_s", "step_s", "min_gap"});
  read(pl, "base_url", c.endpoint.base_url);
  read(pl, "path", c.endpoint.path);
  read(pl, "model", c.endpoint.model);
  read(pl, "api_key_env", c.endpoint.api_key_env);
  read(pl, "timeout_s", c.endpoint.timeout_s);
  read(pl, "retries", c.endpoint.retries);
  read(pl, "backoff_initial_s", c.endpoint.backoff_initial_s);
  read(pl, "step_s", c.mock.step_s);
  read(pl, "min_gap", c.mock.min_gap);
  c.mock.v_max = c.sim.v_max;
  planner::validate(c.endpoint);

  const json & arb = section(root, "arbiter");
  check_keys(arb, "arbiter", {"front_gap_factor", "cadence"});
  read(arb, "front_gap_factor", c.arbiter.rule.front_gap_factor);
  if (arb.contains("cadence")) {
    const std::string cadence = arb.at("cadence").get<std::string>();
    if (cadence == "lane_change") {
      c.arbiter.cadence = safety::QueryCadence::OnLaneChange;
    } else if (cadence == "every_decision") {
      c.arbiter.cadence = safety::QueryCadence::EveryDecision;
    } else {
      throw ConfigError("arbiter cadence must be 'lane_change' or 'every_decision'");
    }
  }

  const json & kb = section(root, "knowledge");
  check_keys(kb, "knowledge", {"recordings", "stride", "neighbors"});
  read(kb, "recordings", c.knowledge_recordings);
  read(kb, "stride", c.knowledge_stride);
  read(kb, "neighbors", c.neighbors);

  if (c.train_episodes < 0 || c.eval_episodes < 0 || c.knowledge_recordings < 1 ||
      c.knowledge_stride < 1 || c.neighbors < 1) {
    throw ConfigError("episode counts must be non-negative; knowledge settings positive");
  }
  return c;
}

json config_to_json(const ExperimentConfig & c)
{
  const controllers::IdmParams & p = c.sim.control.idm;
  const controllers::PidGains & g = c.sim.control.lateral;
  return {
    {"sim",
     {{"dt", c.sim.dt},
      {"episode_frames", c.sim.episode_frames},
      {"decision_period", c.sim.decision_period},
      {"ego_length", c.sim.ego_length},
      {"ego_width", c.sim.ego_width},
      {"v_max", c.sim.v_max},
      {"lane_capture_radius", c.sim.control.lane_capture_radius},
      {"reward",
       {{"speed", c.sim.reward.speed},
        {"collision", c.sim.reward.collision},
        {"lane_change", c.sim.reward.lane_change}}}}},
    {"idm",
     {{"min_gap", p.min_gap},
      {"desired_velocity", p.desired_velocity},
      {"max_acceleration", p.max_acceleration},
      {"max_deceleration", p.max_deceleration},
      {"safe_deceleration", p.safe_deceleration},
      {"time_headway", p.time_headway}}},
    {"lateral_pid",
     {{"k_p", g.k_p},
      {"k_i", g.k_i},
      {"k_d", g.k_d},
      {"integral_clamp", g.integral_clamp},
      {"output_clamp", g.output_clamp}}},
    {"agent",
     {{"gamma", c.agent.gamma},
      {"epsilon",
       {{"start", c.agent.epsilon.start},
        {"end", c.agent.epsilon.end},
        {"decay_steps", c.agent.epsilon.decay_steps}}},
      {"batch_size", c.agent.batch_size},
      {"target_sync_period", c.agent.target_sync_period},
      {"learning_rate", c.agent.learning_rate},
      {"replay_capacity", c.agent.replay_capacity},
      {"hidden_layers", c.agent.hidden_layers},
      {"learning_starts", c.agent.learning_starts},
      {"seed", c.agent.seed}}},
    {"train", {{"episodes", c.train_episodes}, {"seed", c.train_seed}}},
    {"eval", {{"episodes", c.eval_episodes}, {"scenario", c.scenario}}},
    {"planner",
     {{"base_url", c.endpoint.base_url},
      {"path", c.endpoint.path},
      {"model", c.endpoint.model},
      {"api_key_env", c.endpoint.api_key_env},
      {"timeout_s", c.endpoint.timeout_s},
      {"retries", c.endpoint.retries},
      {"backoff_initial_s", c.endpoint.backoff_initial_s},
      {"step_s", c.mock.step_s},
      {"min_gap", c.mock.min_gap}}},
    {"arbiter",
     {{"front_gap_factor", c.arbiter.rule.front_gap_factor},
      {"cadence",
       c.arbiter.cadence == safety::QueryCadence::OnLaneChange ? "lane_change"
                                                               : "every_decision"}}},
    {"knowledge",
     {{"recordings", c.knowledge_recordings},
      {"stride", c.knowledge_stride},
      {"neighbors", c.neighbors}}}};
}

ExperimentConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("config " + path.string() + " is not valid JSON");
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path & path, const ExperimentConfig & config)
{
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write config " + path.string());
  }
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace lanepilot::experiments
