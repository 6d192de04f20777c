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

#include "lanepilot/episode_log.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <utility>

namespace lanepilot::experiments
{

using nlohmann::json;

std::string_view to_string(RunMode mode)
{
  switch (mode) {
    case RunMode::RL_IDM:
      return "RL_IDM";
    case RunMode::RL_LLM_TRAJECTORY:
      return "RL_LLM_TRAJECTORY";
    case RunMode::RL_IDM_LLM_SAFETY:
      return "RL_IDM_LLM_SAFETY";
  }
  return "unknown";
}

std::string_view display_name(RunMode mode)
{
  switch (mode) {
    case RunMode::RL_IDM:
      return "RL+IDM";
    case RunMode::RL_LLM_TRAJECTORY:
      return "RL+LLM_Trajectory";
    case RunMode::RL_IDM_LLM_SAFETY:
      return "RL+IDM+LLM_safety";
  }
  return "unknown";
}

std::optional<RunMode> parse_mode(std::string_view name)
{
  for (RunMode m : kAllModes) {
    if (to_string(m) == name || display_name(m) == name) {
      return m;
    }
  }
  return std::nullopt;
}

bool StepRecord::operator==(const StepRecord & o) const
{
  const bool same_command =
    command.has_value() == o.command.has_value() &&
    (!command || (command->a_x == o.command->a_x && command->a_y == o.command->a_y));
  return frame == o.frame && action == o.action && same_command && ego == o.ego &&
         target_lane == o.target_lane && reward == o.reward && collided == o.collided &&
         road_exit == o.road_exit;
}

bool DecisionRecord::operator==(const DecisionRecord & o) const
{
  return frame == o.frame && ego == o.ego && rl_action == o.rl_action && executed == o.executed &&
         arbiter == o.arbiter && query == o.query && plan == o.plan && traffic == o.traffic;
}

std::int64_t EpisodeLog::last_frame() const
{
  return steps.empty() ? start.start_frame : steps.back().frame;
}

std::optional<kinematics::VehicleState> EpisodeLog::ego_at(std::int64_t frame) const
{
  if (frame == start.start_frame) {
    return initial;
  }
  const std::int64_t offset = frame - start.start_frame - 1;
  if (offset < 0 || offset >= static_cast<std::int64_t>(steps.size())) {
    return std::nullopt;
  }
  return steps[static_cast<std::size_t>(offset)].ego;
}

double EpisodeLog::mean_speed() const
{
  if (steps.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (const StepRecord & s : steps) {
    sum += s.ego.v_x;
  }
  return sum / static_cast<double>(steps.size());
}

bool EpisodeLog::operator==(const EpisodeLog & o) const
{
  return mode == o.mode && scenario == o.scenario && seed == o.seed && planner == o.planner &&
         dt == o.dt && decision_period == o.decision_period && ego_length == o.ego_length &&
         ego_width == o.ego_width && lane_boundaries == o.lane_boundaries &&
         lane_centers == o.lane_centers && start.start_frame == o.start.start_frame &&
         start.lane_id == o.start.lane_id && start.x == o.start.x && start.v_x == o.start.v_x &&
         initial == o.initial && steps == o.steps && decisions == o.decisions &&
         collided == o.collided && road_exit == o.road_exit && collided_with == o.collided_with;
}

namespace
{

json state_json(const kinematics::VehicleState & s)
{
  return {{"x", s.x}, {"y", s.y}, {"v_x", s.v_x}, {"v_y", s.v_y}, {"a_x", s.a_x}, {"a_y", s.a_y}};
}

kinematics::VehicleState state_from(const json & j)
{
  return {j.at("x").get<double>(),   j.at("y").get<double>(),   j.at("v_x").get<double>(),
          j.at("v_y").get<double>(), j.at("a_x").get<double>(), j.at("a_y").get<double>()};
}

std::string action_name(env::MetaAction a) { return std::string(env::to_string(a)); }

env::MetaAction action_from(const json & j)
{
  const auto a = env::parse_action(j.get<std::string>());
  if (!a) {
    throw LogError("unknown action '" + j.get<std::string>() + "'");
  }
  return *a;
}

std::uint64_t hash_from(const json & j)
{
  return std::stoull(j.get<std::string>(), nullptr, 16);
}

json header_json(const EpisodeLog & log)
{
  return {{"type", "header"},
          {"mode", to_string(log.mode)},
          {"scenario", log.scenario},
          {"seed", log.seed},
          {"planner", log.planner},
          {"dt", log.dt},
          {"decision_period", log.decision_period},
          {"ego_length", log.ego_length},
          {"ego_width", log.ego_width},
          {"lane_boundaries", log.lane_boundaries},
          {"lane_centers", log.lane_centers},
          {"start",
           {{"start_frame", log.start.start_frame},
            {"lane_id", log.start.lane_id},
            {"x", log.start.x},
            {"v_x", log.start.v_x}}},
          {"initial", state_json(log.initial)}};
}

json decision_json(const DecisionRecord & d)
{
  json j = {{"type", "decision"},
            {"frame", d.frame},
            {"ego", state_json(d.ego)},
            {"rl_action", action_name(d.rl_action)},
            {"executed", action_name(d.executed)}};
  if (d.arbiter) {
    j["arbiter"] = {{"rl_action", action_name(d.arbiter->rl_action)},
                    {"llm_action", action_name(d.arbiter->llm_action)},
                    {"executed", action_name(d.arbiter->executed)},
                    {"agreed", d.arbiter->agreed}};
  }
  if (d.query) {
    j["query"] = {{"prompt_hash", planner::hash_hex(d.query->prompt_hash)},
                  {"action", action_name(d.query->action)},
                  {"retries", d.query->retries},
                  {"fallback", d.query->fallback},
                  {"fallback_reason", d.query->fallback_reason}};
  }
  if (d.plan) {
    json wps = json::array();
    for (const controllers::Waypoint & w : d.plan->prediction.waypoints) {
      wps.push_back({w.x, w.y});
    }
    j["plan"] = {{"command", action_name(d.plan->command)},
                 {"prompt_hash", planner::hash_hex(d.plan->prompt_hash)},
                 {"waypoints", wps},
                 {"reason", d.plan->prediction.reason},
                 {"retries", d.plan->retries},
                 {"fallback", d.plan->fallback},
                 {"fallback_reason", d.plan->fallback_reason}};
  }
  json traffic = json::array();
  for (const TrafficBox & b : d.traffic) {
    traffic.push_back({b.id, b.x, b.y, b.length, b.width});
  }
  j["traffic"] = traffic;
  return j;
}

json step_json(const StepRecord & s)
{
  json j = {{"type", "step"},
            {"frame", s.frame},
            {"action", action_name(s.action)},
            {"ego", state_json(s.ego)},
            {"target_lane", s.target_lane},
            {"reward", s.reward},
            {"collided", s.collided},
            {"road_exit", s.road_exit}};
  if (s.command) {
    j["command"] = {s.command->a_x, s.command->a_y};
  }
  return j;
}

json final_json(const EpisodeLog & log)
{
  json j = {{"type", "final"},
            {"steps", log.steps.size()},
            {"decisions", log.decisions.size()},
            {"last_frame", log.last_frame()},
            {"collided", log.collided},
            {"road_exit", log.road_exit},
            {"mean_speed", log.mean_speed()}};
  j["collided_with"] = log.collided_with ? json(*log.collided_with) : json(nullptr);
  return j;
}

}  // namespace

void write_log(std::ostream & out, const EpisodeLog & log)
{
  out << header_json(log).dump() << '\n';
  std::size_t next_decision = 0;
  for (const StepRecord & s : log.steps) {
    while (next_decision < log.decisions.size() && log.decisions[next_decision].frame < s.frame) {
      out << decision_json(log.decisions[next_decision++]).dump() << '\n';
    }
    out << step_json(s).dump() << '\n';
  }
  while (next_decision < log.decisions.size()) {
    out << decision_json(log.decisions[next_decision++]).dump() << '\n';
  }
  out << final_json(log).dump() << '\n';
}

void write_log(const std::filesystem::path & path, const EpisodeLog & log)
{
  std::ofstream out(path);
  if (!out) {
    throw LogError("cannot write log " + path.string());
  }
  write_log(out, log);
}

std::string format_log(const EpisodeLog & log)
{
  std::ostringstream out;
  write_log(out, log);
  return out.str();
}

EpisodeLog read_log(std::istream & in)
{
  EpisodeLog log;
  bool have_header = false;
  bool have_final = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        const auto mode = parse_mode(j.at("mode").get<std::string>());
        if (!mode) {
          throw LogError("unknown mode");
        }
        log.mode = *mode;
        log.scenario = j.at("scenario").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.planner = j.at("planner").get<std::string>();
        log.dt = j.at("dt").get<double>();
        log.decision_period = j.at("decision_period").get<int>();
        log.ego_length = j.at("ego_length").get<double>();
        log.ego_width = j.at("ego_width").get<double>();
        log.lane_boundaries = j.at("lane_boundaries").get<std::vector<double>>();
        log.lane_centers = j.at("lane_centers").get<std::vector<double>>();
        const json & st = j.at("start");
        log.start = {st.at("start_frame").get<std::int64_t>(), st.at("lane_id").get<int>(),
                     st.at("x").get<double>(), st.at("v_x").get<double>()};
        log.initial = state_from(j.at("initial"));
        have_header = true;
      } else if (type == "decision") {
        DecisionRecord d;
        d.frame = j.at("frame").get<std::int64_t>();
        d.ego = state_from(j.at("ego"));
        d.rl_action = action_from(j.at("rl_action"));
        d.executed = action_from(j.at("executed"));
        if (j.contains("arbiter")) {
          const json & a = j.at("arbiter");
          d.arbiter = safety::ArbiterDecision{action_from(a.at("rl_action")),
                                              action_from(a.at("llm_action")),
                                              action_from(a.at("executed")),
                                              a.at("agreed").get<bool>()};
        }
        if (j.contains("query")) {
          const json & q = j.at("query");
          d.query = QueryRecord{hash_from(q.at("prompt_hash")), action_from(q.at("action")),
                                q.at("retries").get<int>(), q.at("fallback").get<bool>(),
                                q.at("fallback_reason").get<std::string>()};
        }
        if (j.contains("plan")) {
          const json & p = j.at("plan");
          PlanRecord plan;
          plan.command = action_from(p.at("command"));
          plan.prompt_hash = hash_from(p.at("prompt_hash"));
          const json & wps = p.at("waypoints");
          if (wps.size() != planner::kWaypointCount) {
            throw LogError("plan must carry exactly 3 waypoints");
          }
          for (std::size_t n = 0; n < planner::kWaypointCount; ++n) {
            plan.prediction.waypoints[n] = {wps[n].at(0).get<double>(), wps[n].at(1).get<double>()};
          }
          plan.prediction.reason = p.at("reason").get<std::string>();
          plan.retries = p.at("retries").get<int>();
          plan.fallback = p.at("fallback").get<bool>();
          plan.fallback_reason = p.at("fallback_reason").get<std::string>();
          d.plan = std::move(plan);
        }
        for (const json & b : j.at("traffic")) {
          d.traffic.push_back({b.at(0).get<std::int64_t>(), b.at(1).get<double>(),
                               b.at(2).get<double>(), b.at(3).get<double>(),
                               b.at(4).get<double>()});
        }
        log.decisions.push_back(std::move(d));
      } else if (type == "step") {
        StepRecord s;
        s.frame = j.at("frame").get<std::int64_t>();
        s.action = action_from(j.at("action"));
        s.ego = state_from(j.at("ego"));
        s.target_lane = j.at("target_lane").get<int>();
        s.reward = j.at("reward").get<double>();
        s.collided = j.at("collided").get<bool>();
        s.road_exit = j.at("road_exit").get<bool>();
        if (j.contains("command")) {
          s.command = controllers::Acceleration{j.at("command").at(0).get<double>(),
                                                j.at("command").at(1).get<double>()};
        }
        log.steps.push_back(s);
      } else if (type == "final") {
        log.collided = j.at("collided").get<bool>();
        log.road_exit = j.at("road_exit").get<bool>();
        if (!j.at("collided_with").is_null()) {
          log.collided_with = j.at("collided_with").get<std::int64_t>();
        }
        have_final = true;
      } else {
        throw LogError("unknown record type '" + type + "'");
      }
    } catch (const json::exception & e) {
      throw LogError("log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const LogError & e) {
      throw LogError("log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header || !have_final) {
    throw LogError("log is missing its header or final record");
  }
  return log;
}

EpisodeLog read_log(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw LogError("cannot open log " + path.string());
  }
  return read_log(in);
}

std::filesystem::path timing_path(const std::filesystem::path & log_path)
{
  return std::filesystem::path(log_path.string() + ".timing.jsonl");
}

void write_timing(const std::filesystem::path & path, const EpisodeLog & log)
{
  std::ofstream out(path);
  if (!out) {
    throw LogError("cannot write timing file " + path.string());
  }
  for (const DecisionRecord & d : log.decisions) {
    out << json{{"frame", d.frame}, {"inference_s", d.inference_s}}.dump() << '\n';
  }
}

void read_timing(const std::filesystem::path & path, EpisodeLog & log)
{
  std::ifstream in(path);
  if (!in) {
    throw LogError("cannot open timing file " + path.string());
  }
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line) && i < log.decisions.size()) {
    if (line.empty()) {
      continue;
    }
    const json j = json::parse(line);
    if (j.at("frame").get<std::int64_t>() != log.decisions[i].frame) {
      throw LogError("timing file does not match the log's decisions");
    }
    log.decisions[i].inference_s = j.at("inference_s").get<double>();
    ++i;
  }
}

}  // namespace lanepilot::experiments
