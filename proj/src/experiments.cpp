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

#include "lanepilot/experiments.hpp"

#include "lanepilot/scenarios.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace lanepilot::experiments
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<TrafficBox> traffic_boxes(std::span<const dataset::TrackRow> rows)
{
  std::vector<TrafficBox> out;
  out.reserve(rows.size());
  for (const dataset::TrackRow & r : rows) {
    out.push_back({r.vehicle_id, r.x, r.y, r.width, r.height});
  }
  return out;
}

/// Order-independent sum: sort first so the rounding sequence is fixed.
double stable_sum(std::vector<double> values)
{
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0);
}

std::string fmt(double v, int digits)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

RlPolicy network_policy(const neural::Mlp & net)
{
  auto frozen = std::make_shared<const neural::Mlp>(net);
  return [frozen](const env::ObservationVector & obs) {
    return dqn::greedy_action(frozen->forward(dqn::to_eigen(obs)));
  };
}

RlPolicy constant_policy(env::MetaAction action)
{
  return [action](const env::ObservationVector &) { return action; };
}

RlPolicy scripted_policy(std::vector<env::MetaAction> actions)
{
  auto script = std::make_shared<std::vector<env::MetaAction>>(std::move(actions));
  auto cursor = std::make_shared<std::size_t>(0);
  return [script, cursor](const env::ObservationVector &) {
    if (*cursor < script->size()) {
      return (*script)[(*cursor)++];
    }
    return env::MetaAction::LK;
  };
}

std::vector<retrieval::KnowledgeRecord> retrieve_neighbors(const retrieval::KnnIndex * index,
                                                           const env::Observation & obs,
                                                           const kinematics::LaneGeometry & lanes,
                                                           std::size_t k)
{
  std::vector<retrieval::KnowledgeRecord> out;
  if (index == nullptr) {
    return out;
  }
  const retrieval::KeyVector key = retrieval::vectorize(retrieval::features_of(obs), lanes);
  for (retrieval::KnnHit & hit : index->query(key, k)) {
    out.push_back(std::move(hit.record));
  }
  return out;
}

EpisodeLog run_episode(const EpisodeRequest & request, const ModeStack & stack)
{
  if (!stack.policy) {
    throw std::invalid_argument("every run mode needs an RL policy");
  }
  if (request.mode == RunMode::RL_LLM_TRAJECTORY && stack.planner == nullptr) {
    throw std::invalid_argument("trajectory mode needs a planner");
  }
  if (request.mode == RunMode::RL_IDM_LLM_SAFETY && stack.advisor == nullptr) {
    throw std::invalid_argument("safety mode needs an action advisor");
  }
  const dqn::EpisodeSetup & setup = request.setup;
  env::HighwayEnv environment(setup.table, setup.sim);
  env::Observation obs = environment.reset(setup.spec);
  const kinematics::LaneGeometry & lanes = environment.lanes();

  EpisodeLog log;
  log.mode = request.mode;
  log.scenario = request.scenario;
  log.seed = request.seed;
  log.dt = setup.sim.dt;
  log.decision_period = setup.sim.decision_period;
  log.ego_length = setup.sim.ego_length;
  log.ego_width = setup.sim.ego_width;
  log.lane_boundaries = lanes.boundaries();
  log.lane_centers = lanes.centers();
  log.start = setup.spec;
  log.initial = environment.ego();
  switch (request.mode) {
    case RunMode::RL_IDM:
      log.planner = "none";
      break;
    case RunMode::RL_LLM_TRAJECTORY:
      log.planner = std::string(stack.planner->name());
      break;
    case RunMode::RL_IDM_LLM_SAFETY:
      log.planner = std::string(stack.advisor->name());
      break;
  }

  controllers::WaypointTracker tracker(stack.tracker_x, stack.tracker_y, stack.planner_step_s,
                                       setup.sim.control.lane_capture_radius);
  std::int64_t frames_in_period = 0;
  bool done = false;
  while (!done) {
    env::MetaAction action = env::MetaAction::LK;
    if (frames_in_period % setup.sim.decision_period == 0) {
      DecisionRecord d;
      d.frame = environment.frame();
      d.ego = environment.ego();
      d.traffic = traffic_boxes(environment.traffic());
      const env::ObservationVector input = env::normalize(obs, setup.sim.v_max);

      const auto t0 = Clock::now();
      d.rl_action = stack.policy(input);
      const double forward_s = seconds_since(t0);
      d.executed = d.rl_action;
      double extra_s = 0.0;

      if (request.mode == RunMode::RL_IDM_LLM_SAFETY) {
        const auto t1 = Clock::now();
        const bool consult = stack.cadence == safety::QueryCadence::EveryDecision ||
                             env::is_lane_change(d.rl_action);
        const auto neighbors = consult ? retrieve_neighbors(stack.index, obs, lanes, stack.neighbors)
                                       : std::vector<retrieval::KnowledgeRecord>{};
        const safety::ArbitrationRecord rec =
          safety::arbitrate(*stack.advisor, stack.cadence, d.rl_action, obs, neighbors);
        extra_s = seconds_since(t1);
        d.arbiter = rec.decision;
        d.executed = rec.decision.executed;
        if (rec.query) {
          d.query = QueryRecord{rec.query->prompt_hash, rec.query->action, rec.query->retries,
                                rec.query->fallback, rec.query->fallback_reason};
        }
      } else if (request.mode == RunMode::RL_LLM_TRAJECTORY) {
        const auto t1 = Clock::now();
        const auto neighbors = retrieve_neighbors(stack.index, obs, lanes, stack.neighbors);
        // an in-progress lane change keeps its direction in the planner command
        const int target = environment.preview_target(d.rl_action);
        const int current = environment.current_lane();
        const env::MetaAction command = target < current   ? env::MetaAction::LLC
                                        : target > current ? env::MetaAction::RLC
                                                           : env::MetaAction::LK;
        const planner::PlanOutcome outcome =
          stack.planner->plan({obs, command, neighbors, lanes});
        tracker.set_plan(outcome.prediction.waypoints);
        extra_s = seconds_since(t1);
        d.plan = PlanRecord{command, outcome.prompt_hash, outcome.prediction, outcome.retries,
                            outcome.fallback, outcome.fallback_reason};
      }
      d.inference_s = forward_s + extra_s;
      action = d.executed;
      log.decisions.push_back(std::move(d));
    }

    StepRecord step;
    env::StepResult res;
    if (request.mode == RunMode::RL_LLM_TRAJECTORY) {
      const controllers::Acceleration cmd = tracker.step(environment.ego(), setup.sim.dt);
      step.command = cmd;
      res = environment.step(action, cmd);
    } else {
      res = environment.step(action);
    }
    step.frame = res.info.frame;
    step.action = action;
    step.ego = environment.ego();
    step.target_lane = res.info.target_lane;
    step.reward = res.reward;
    step.collided = res.info.collided;
    step.road_exit = res.info.road_exit;
    log.steps.push_back(step);

    log.collided = log.collided || res.info.collided;
    log.road_exit = log.road_exit || res.info.road_exit;
    if (res.info.collided_with && !log.collided_with) {
      log.collided_with = res.info.collided_with;
    }
    obs = res.observation;
    done = res.done;
    ++frames_in_period;
  }
  return log;
}

std::vector<EpisodeLog> run_sweep(std::span<const RunMode> modes, std::string_view scenario,
                                  std::span<const std::uint64_t> seeds, const env::SimConfig & sim,
                                  const ModeStack & stack)
{
  std::vector<EpisodeLog> logs;
  for (RunMode mode : modes) {
    for (std::uint64_t seed : seeds) {
      EpisodeRequest request{mode, std::string(scenario), seed,
                             scenarios::make_scenario(scenario, seed, sim)};
      logs.push_back(run_episode(request, stack));
    }
  }
  return logs;
}

PlannerBackends make_backends(std::string_view kind, const ExperimentConfig & config)
{
  PlannerBackends out;
  if (kind == "mock") {
    out.planner = std::make_unique<planner::MockPlanner>(config.mock);
    out.advisor = std::make_unique<safety::MockAdvisor>(config.arbiter.rule);
  } else if (kind == "live") {
    out.planner = std::make_unique<planner::LivePlanner>(config.endpoint, config.mock);
    out.advisor = std::make_unique<safety::LiveAdvisor>(config.endpoint);
  } else {
    throw std::invalid_argument("planner must be 'mock' or 'live', got '" + std::string(kind) + "'");
  }
  return out;
}

const ModeMetrics * MetricsReport::find(RunMode mode) const
{
  for (const ModeMetrics & m : modes) {
    if (m.mode == mode) {
      return &m;
    }
  }
  return nullptr;
}

MetricsReport aggregate_metrics(std::span<const EpisodeLog> logs)
{
  if (logs.empty()) {
    throw std::invalid_argument("aggregate_metrics needs at least one log");
  }
  MetricsReport report;
  for (RunMode mode : kAllModes) {
    ModeMetrics m;
    m.mode = mode;
    int collisions = 0;
    std::size_t steps = 0;
    std::vector<double> speed_sums;
    std::vector<double> consulted;
    std::vector<double> all_decisions;
    for (const EpisodeLog & log : logs) {
      if (log.mode != mode) {
        continue;
      }
      ++m.runs;
      collisions += log.collisions();
      m.road_exits += log.road_exit ? 1 : 0;
      m.seeds.push_back(log.seed);
      double sum = 0.0;
      for (const StepRecord & s : log.steps) {
        sum += s.ego.v_x;
      }
      speed_sums.push_back(sum);
      steps += log.steps.size();
      for (const DecisionRecord & d : log.decisions) {
        all_decisions.push_back(d.inference_s);
        if (d.query) {
          consulted.push_back(d.inference_s);
        }
      }
    }
    if (m.runs == 0) {
      continue;
    }
    std::sort(m.seeds.begin(), m.seeds.end());
    m.collisions_per_run = static_cast<double>(collisions) / m.runs;
    m.velocity_kmh = steps > 0 ? 3.6 * stable_sum(speed_sums) / static_cast<double>(steps) : 0.0;
    const std::vector<double> & samples =
      mode == RunMode::RL_IDM_LLM_SAFETY && !consulted.empty() ? consulted : all_decisions;
    m.inference_s =
      samples.empty() ? 0.0 : stable_sum(samples) / static_cast<double>(samples.size());
    report.modes.push_back(std::move(m));
  }
  return report;
}

std::string format_metrics_csv(const MetricsReport & report)
{
  std::ostringstream out;
  out << "metric";
  for (const ModeMetrics & m : report.modes) {
    out << ',' << display_name(m.mode);
  }
  out << "\nCollision No";
  for (const ModeMetrics & m : report.modes) {
    out << ',' << fmt(m.collisions_per_run, 4);
  }
  out << "\nVelocity (km/h)";
  for (const ModeMetrics & m : report.modes) {
    out << ',' << fmt(m.velocity_kmh, 2);
  }
  out << "\nInference Time (s)";
  for (const ModeMetrics & m : report.modes) {
    out << ',' << fmt(m.inference_s, 9);
  }
  out << "\nRuns";
  for (const ModeMetrics & m : report.modes) {
    out << ',' << m.runs;
  }
  out << '\n';
  return out.str();
}

std::string format_metrics_table(const MetricsReport & report)
{
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-20s", "");
  out << buf;
  for (const ModeMetrics & m : report.modes) {
    std::snprintf(buf, sizeof(buf), "%20s", std::string(display_name(m.mode)).c_str());
    out << buf;
  }
  out << '\n';
  auto row = [&](const char * label, auto value_of) {
    std::snprintf(buf, sizeof(buf), "%-20s", label);
    out << buf;
    for (const ModeMetrics & m : report.modes) {
      std::snprintf(buf, sizeof(buf), "%20s", value_of(m).c_str());
      out << buf;
    }
    out << '\n';
  };
  row("Collision No", [](const ModeMetrics & m) { return fmt(m.collisions_per_run, 2); });
  row("Velocity (km/h)", [](const ModeMetrics & m) { return fmt(m.velocity_kmh, 2); });
  row("Inference Time (s)", [](const ModeMetrics & m) { return fmt(m.inference_s, 6); });
  row("Runs", [](const ModeMetrics & m) { return std::to_string(m.runs); });
  return out.str();
}

TrajectoryComparison compare_trajectories(const EpisodeLog & log, int frames_per_waypoint)
{
  if (frames_per_waypoint < 1) {
    throw std::invalid_argument("frames per waypoint must be positive");
  }
  TrajectoryComparison out;
  for (const DecisionRecord & d : log.decisions) {
    if (!d.plan) {
      continue;
    }
    for (std::size_t n = 0; n < planner::kWaypointCount; ++n) {
      const std::int64_t frame = d.frame + static_cast<std::int64_t>(n + 1) * frames_per_waypoint;
      const auto actual = log.ego_at(frame);
      if (!actual) {
        ++out.skipped;
        continue;
      }
      const controllers::Waypoint & w = d.plan->prediction.waypoints[n];
      out.errors.push_back({d.frame, n + 1, std::hypot(w.x - actual->x, w.y - actual->y)});
    }
  }
  if (!out.errors.empty()) {
    double sum = 0.0;
    for (const WaypointError & e : out.errors) {
      sum += e.error;
      out.max_error = std::max(out.max_error, e.error);
    }
    out.mean_error = sum / static_cast<double>(out.errors.size());
  }
  return out;
}

ReplayResult replay_log(const EpisodeLog & log, const dqn::EpisodeSetup & setup)
{
  ReplayResult out;
  env::HighwayEnv environment(setup.table, setup.sim);
  environment.reset(log.start);
  if (!(environment.ego() == log.initial)) {
    return {false, log.start.start_frame, "initial state differs"};
  }
  for (const StepRecord & s : log.steps) {
    if (environment.done()) {
      return {false, s.frame, "environment finished before the log did"};
    }
    const env::StepResult res =
      s.command ? environment.step(s.action, *s.command) : environment.step(s.action);
    if (res.info.frame != s.frame || !(environment.ego() == s.ego) || res.reward != s.reward ||
        res.info.collided != s.collided || res.info.road_exit != s.road_exit ||
        res.info.target_lane != s.target_lane) {
      return {false, s.frame, "state mismatch at frame " + std::to_string(s.frame)};
    }
  }
  if (!environment.done()) {
    return {false, log.last_frame(), "environment did not finish where the log did"};
  }
  return out;
}

}  // namespace lanepilot::experiments
