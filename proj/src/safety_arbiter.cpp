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

#include "lanepilot/safety_arbiter.hpp"

#include <chrono>
#include <limits>
#include <string>
#include <utility>

namespace lanepilot::safety
{

namespace
{

constexpr const char * kActionToolName = "choose_action";

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ArbiterDecision consensus(env::MetaAction rl_action, env::MetaAction llm_action)
{
  const bool agreed = rl_action == llm_action;
  return {rl_action, llm_action, agreed ? rl_action : env::MetaAction::LK, agreed};
}

std::string_view wire_name(env::MetaAction action)
{
  switch (action) {
    case env::MetaAction::LLC:
      return "left";
    case env::MetaAction::RLC:
      return "right";
    case env::MetaAction::LK:
      return "keep";
  }
  throw std::invalid_argument("unknown meta-action");
}

std::optional<env::MetaAction> from_wire_name(std::string_view name)
{
  for (env::MetaAction a : env::kAllActions) {
    if (wire_name(a) == name) {
      return a;
    }
  }
  return std::nullopt;
}

nlohmann::json action_schema()
{
  return {{"type", "function"},
          {"function",
           {{"name", kActionToolName},
            {"description", "High-level action for the ego-vehicle"},
            {"parameters",
             {{"type", "object"},
              {"properties",
               {{"action",
                 {{"type", "string"}, {"enum", nlohmann::json::array({"left", "right", "keep"})}}}}},
              {"required", nlohmann::json::array({"action"})}}}}}};
}

planner::PromptBundle build_safety_prompt(const env::Observation & state,
                                          std::span<const retrieval::KnowledgeRecord> neighbors)
{
  using planner::format_fixed2;
  std::string role =
    "You are an AI assistant deciding the high-level action of a vehicle on a highway. "
    "Choose one of: left (change to the left lane), right (change to the right lane), "
    "keep (keep in the same lane). Only choose a lane change when it is safe.";

  std::string user = "The ego-vehicle is in lane " + std::to_string(state.lane_id) + " of " +
                     std::to_string(state.lane_count) + " (lane 1 is leftmost).";
  user += " Position x " + format_fixed2(state.ego.x) + ", y " + format_fixed2(state.ego.y);
  user += "; velocity x " + format_fixed2(state.ego.v_x) + ", y " + format_fixed2(state.ego.v_y);
  user += "; acceleration x " + format_fixed2(state.ego.a_x) + ", y " +
          format_fixed2(state.ego.a_y) + ".";
  constexpr std::array<const char *, env::kSlotCount> kSlotNames{
    "front same lane", "back same lane", "front left lane",
    "back left lane", "front right lane", "back right lane"};
  for (std::size_t k = 0; k < env::kSlotCount; ++k) {
    const env::SlotReading & s = state.slots[k];
    user += std::string(" ") + kSlotNames[k] + ": ";
    user += s.present ? "gap " + format_fixed2(s.distance) + " m at " + format_fixed2(s.velocity) +
                          " m/s."
                      : "no vehicle.";
  }
  std::vector<retrieval::KnowledgeRecord> padded(neighbors.begin(), neighbors.end());
  if (padded.size() > 3) {
    padded.resize(3);
  }
  while (!padded.empty() && padded.size() < 3) {
    padded.push_back(padded.front());
  }
  user += " Similar past trajectories: " + planner::serialize_neighbors(padded) + ".";
  user += " Choose the action for the next decision step.";
  return {std::move(role), std::move(user), action_schema()};
}

env::MetaAction parse_action_response(const std::string & body)
{
  const nlohmann::json args = planner::extract_tool_arguments(body);
  const nlohmann::json schema = action_schema().at("function").at("parameters");
  if (auto violation = planner::schema_violation(schema, args)) {
    throw planner::UnparseablePrediction(*violation, body);
  }
  return *from_wire_name(args.at("action").get<std::string>());
}

std::string serialize_action_response(env::MetaAction action)
{
  const nlohmann::json args = {{"action", wire_name(action)}};
  const nlohmann::json call = {
    {"id", "call_0"},
    {"type", "function"},
    {"function", {{"name", kActionToolName}, {"arguments", args.dump()}}}};
  return nlohmann::json{
    {"object", "chat.completion"},
    {"choices",
     nlohmann::json::array(
       {{{"index", 0},
         {"message",
          {{"role", "assistant"}, {"content", nullptr}, {"tool_calls", nlohmann::json::array({call})}}},
         {"finish_reason", "tool_calls"}}})}}
    .dump();
}

env::MetaAction rule_action(const env::Observation & state, const SafetyRuleConfig & config)
{
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto gap_of = [](const env::SlotReading & s) { return s.present ? s.distance : kInf; };

  const env::SlotReading & front = state.slot(env::Slot::FrontSame);
  const double v = std::max(state.ego.v_x, 0.0);
  const double v_lead = front.present ? front.velocity : v;
  const double s_star = controllers::desired_gap(config.idm, v, v_lead);
  if (gap_of(front) >= s_star) {
    return env::MetaAction::LK;
  }
  auto lane_open = [&](env::Slot f, env::Slot b) {
    return gap_of(state.slot(f)) > config.front_gap_factor * s_star &&
           gap_of(state.slot(b)) > config.idm.min_gap;
  };
  if (state.lane_id > 1 && lane_open(env::Slot::FrontLeft, env::Slot::BackLeft)) {
    return env::MetaAction::LLC;
  }
  if (state.lane_id < state.lane_count && lane_open(env::Slot::FrontRight, env::Slot::BackRight)) {
    return env::MetaAction::RLC;
  }
  return env::MetaAction::LK;
}

ActionQueryResult MockAdvisor::query(const env::Observation & state,
                                     std::span<const retrieval::KnowledgeRecord> neighbors)
{
  const auto start = std::chrono::steady_clock::now();
  ActionQueryResult out;
  out.prompt_hash = planner::prompt_hash(build_safety_prompt(state, neighbors));
  out.action = rule_action(state, config_);
  out.latency_s = seconds_since(start);
  return out;
}

LiveAdvisor::LiveAdvisor(planner::PlannerEndpoint endpoint) : endpoint_(std::move(endpoint))
{
  planner::validate(endpoint_);
}

ActionQueryResult LiveAdvisor::query(const env::Observation & state,
                                     std::span<const retrieval::KnowledgeRecord> neighbors)
{
  const auto start = std::chrono::steady_clock::now();
  const planner::PromptBundle bundle = build_safety_prompt(state, neighbors);
  ActionQueryResult out;
  out.prompt_hash = planner::prompt_hash(bundle);
  try {
    const planner::RawResponse raw = planner::request_prediction(endpoint_, bundle);
    out.retries = raw.retries;
    out.action = parse_action_response(raw.body);
  } catch (const planner::PlannerError & e) {
    out.retries = e.retries();
    out.fallback = true;
    out.fallback_reason = e.what();
    out.action = env::MetaAction::LK;
  } catch (const planner::UnparseablePrediction & e) {
    out.fallback = true;
    out.fallback_reason = e.what();
    out.action = env::MetaAction::LK;
  }
  out.latency_s = seconds_since(start);
  return out;
}

ArbitrationRecord arbitrate(ActionAdvisor & advisor, QueryCadence cadence,
                            env::MetaAction rl_action, const env::Observation & state,
                            std::span<const retrieval::KnowledgeRecord> neighbors)
{
  ArbitrationRecord out;
  if (cadence == QueryCadence::EveryDecision || env::is_lane_change(rl_action)) {
    out.query = advisor.query(state, neighbors);
    out.decision = consensus(rl_action, out.query->action);
  } else {
    out.decision = consensus(rl_action, rl_action);
  }
  return out;
}

}  // namespace lanepilot::safety
