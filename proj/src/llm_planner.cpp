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

#include "lanepilot/llm_planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace lanepilot::planner
{

namespace
{

constexpr const char * kToolName = "predict_waypoints";
constexpr std::array<const char *, 6> kCoordinateFields{"t1_x", "t1_y", "t2_x",
                                                        "t2_y", "t3_x", "t3_y"};

}  // namespace

bool TrajectoryPrediction::operator==(const TrajectoryPrediction & other) const
{
  for (std::size_t i = 0; i < kWaypointCount; ++i) {
    if (waypoints[i].x != other.waypoints[i].x || waypoints[i].y != other.waypoints[i].y) {
      return false;
    }
  }
  return reason == other.reason;
}

std::string_view command_phrase(env::MetaAction action)
{
  switch (action) {
    case env::MetaAction::LLC:
      return "change to the left lane";
    case env::MetaAction::RLC:
      return "change to the right lane";
    case env::MetaAction::LK:
      return "keep in the same lane";
  }
  throw std::invalid_argument("unknown meta-action");
}

std::string format_fixed2(double value)
{
  if (!std::isfinite(value)) {
    throw std::invalid_argument("cannot format a non-finite value");
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", value);
  std::string out(buf);
  if (out == "-0.00") {
    out = "0.00";
  }
  return out;
}

std::string role_text()
{
  return "You are an AI assistant capable of predicting a vehicle's next position on a highway. "
         "You will be provided with commands to change to the left lane, right lane, or keep in "
         "the same lane. You are given information about the current velocity, acceleration, and "
         "position of the ego-vehicle. Additionally, you are provided with information about the "
         "front and back sight distance with other vehicles, including the preceding vehicle's x "
         "velocity. You are also given past similar trajectories for the given state information.";
}

std::string serialize_neighbors(std::span<const retrieval::KnowledgeRecord> neighbors)
{
  if (neighbors.empty()) {
    return "none";
  }
  std::string out;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    if (k > 0) {
      out += "; ";
    }
    out += "[" + std::to_string(k + 1) + "]";
    for (std::size_t n = 0; n < retrieval::kPayloadHorizon; ++n) {
      const retrieval::TrajectorySample & s = neighbors[k].payload[n];
      out += (n == 0 ? " " : ", ");
      out += "t+" + std::to_string(n + 1) + ": (dx " + format_fixed2(s.dx) + ", y " +
             format_fixed2(s.y) + ", vx " + format_fixed2(s.v_x) + ", vy " + format_fixed2(s.v_y) +
             ")";
    }
  }
  return out;
}

PromptBundle build_prompt(const env::Observation & state,
                          std::span<const retrieval::KnowledgeRecord> neighbors,
                          env::MetaAction action)
{
  std::vector<retrieval::KnowledgeRecord> padded(neighbors.begin(), neighbors.end());
  if (padded.size() > kWaypointCount) {
    padded.resize(kWaypointCount);
  }
  while (!padded.empty() && padded.size() < kWaypointCount) {
    padded.push_back(padded.front());
  }

  const kinematics::VehicleState & ego = state.ego;
  std::string user;
  user += "You are given the current state with x position " + format_fixed2(ego.x);
  user += ", y position " + format_fixed2(ego.y);
  user += ", x velocity " + format_fixed2(ego.v_x);
  user += ", y velocity " + format_fixed2(ego.v_y);
  user += ", acceleration in x " + format_fixed2(ego.a_x);
  user += ", acceleration in y " + format_fixed2(ego.a_y);
  user += ", front sight distance " + format_fixed2(state.front_sight_distance);
  user += ", back sight distance " + format_fixed2(state.back_sight_distance);
  user += ", and preceding vehicle's x velocity " + format_fixed2(state.preceding_x_velocity);
  user += ", along with similar past trajectories: " + serialize_neighbors(padded) + ".";
  user += " You are also given a command to " + std::string(command_phrase(action)) + ".";
  user +=
    " Considering the state information and command, predict the next x and y position for the "
    "ego-vehicle for the next three states. You should make logical predictions to avoid "
    "collision with other vehicles, ensure safe travel, and smooth speed transitions. You should "
    "briefly explain your reason for the predictions made.";
  return {role_text(), std::move(user), function_schema()};
}

nlohmann::json function_schema()
{
  nlohmann::json properties = nlohmann::json::object();
  nlohmann::json required = nlohmann::json::array();
  for (std::size_t i = 0; i < kCoordinateFields.size(); ++i) {
    const bool is_x = i % 2 == 0;
    const std::size_t n = i / 2 + 1;
    properties[kCoordinateFields[i]] = {
      {"type", "number"},
      {"description", std::string(is_x ? "Longitudinal" : "Lateral") + " position in meters at t+" +
                        std::to_string(n)}};
    required.push_back(kCoordinateFields[i]);
  }
  properties["reason"] = {{"type", "string"},
                          {"description", "Short rationale for the predicted positions"}};
  required.push_back("reason");
  return {{"type", "function"},
          {"function",
           {{"name", kToolName},
            {"description", "Next three ego-vehicle positions and a short rationale"},
            {"parameters",
             {{"type", "object"}, {"properties", properties}, {"required", required}}}}}};
}

std::optional<std::string> schema_violation(const nlohmann::json & parameters,
                                            const nlohmann::json & args)
{
  if (!args.is_object()) {
    return "arguments are not an object";
  }
  for (const auto & key : parameters.value("required", nlohmann::json::array())) {
    if (!args.contains(key.get<std::string>())) {
      return "missing required field '" + key.get<std::string>() + "'";
    }
  }
  const nlohmann::json props = parameters.value("properties", nlohmann::json::object());
  for (const auto & [name, spec] : props.items()) {
    if (!args.contains(name)) {
      continue;
    }
    const nlohmann::json & value = args.at(name);
    const std::string type = spec.value("type", "");
    if (type == "number" && !value.is_number()) {
      return "field '" + name + "' must be a number";
    }
    if (type == "string" && !value.is_string()) {
      return "field '" + name + "' must be a string";
    }
    if (spec.contains("enum")) {
      const auto & options = spec.at("enum");
      if (std::find(options.begin(), options.end(), value) == options.end()) {
        return "field '" + name + "' is not one of " + options.dump();
      }
    }
  }
  return std::nullopt;
}

std::uint64_t prompt_hash(const PromptBundle & bundle)
{
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](std::string_view text) {
    for (unsigned char c : text) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(bundle.role);
  mix("\n");
  mix(bundle.user);
  return h;
}

std::string hash_hex(std::uint64_t hash)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void validate(const PlannerEndpoint & e)
{
  if (!(e.timeout_s > 0.0)) {
    throw std::invalid_argument("planner timeout must be positive");
  }
  if (e.retries < 0 || e.backoff_initial_s < 0.0) {
    throw std::invalid_argument("planner retries and backoff must be non-negative");
  }
  if (e.base_url.empty() || e.path.empty() || e.path.front() != '/') {
    throw std::invalid_argument("planner endpoint needs a base URL and an absolute path");
  }
}

nlohmann::json build_request_body(const PlannerEndpoint & endpoint, const PromptBundle & bundle)
{
  const std::string tool_name = bundle.tool.at("function").at("name").get<std::string>();
  return {{"model", endpoint.model},
          {"messages",
           nlohmann::json::array({{{"role", "system"}, {"content", bundle.role}},
                                  {{"role", "user"}, {"content", bundle.user}}})},
          {"tools", nlohmann::json::array({bundle.tool})},
          {"tool_choice", {{"type", "function"}, {"function", {{"name", tool_name}}}}},
          {"temperature", 0}};
}

std::string_view to_string(PlannerErrorKind kind)
{
  switch (kind) {
    case PlannerErrorKind::Timeout:
      return "timeout";
    case PlannerErrorKind::Transport:
      return "transport";
    case PlannerErrorKind::HttpStatus:
      return "http_status";
    case PlannerErrorKind::RetriesExhausted:
      return "retries_exhausted";
  }
  return "unknown";
}

PlannerError::PlannerError(PlannerErrorKind kind, const std::string & what, int status,
                           int retries)
: std::runtime_error(std::string(to_string(kind)) + ": " + what),
  kind_(kind),
  status_(status),
  retries_(retries)
{
}

UnparseablePrediction::UnparseablePrediction(const std::string & what, std::string raw)
: std::runtime_error("unparseable prediction: " + what), raw_(std::move(raw))
{
}

nlohmann::json extract_tool_arguments(const std::string & body)
{
  nlohmann::json doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded()) {
    throw UnparseablePrediction("response is not JSON", body);
  }
  const nlohmann::json::json_pointer ptr("/choices/0/message/tool_calls/0/function/arguments");
  if (!doc.contains(ptr)) {
    throw UnparseablePrediction("response carries no tool call", body);
  }
  const nlohmann::json & raw_args = doc.at(ptr);
  nlohmann::json args;
  if (raw_args.is_string()) {
    args = nlohmann::json::parse(raw_args.get<std::string>(), nullptr, false);
    if (args.is_discarded()) {
      throw UnparseablePrediction("tool arguments are not JSON", body);
    }
  } else {
    args = raw_args;
  }
  if (!args.is_object()) {
    throw UnparseablePrediction("tool arguments are not an object", body);
  }
  return args;
}

TrajectoryPrediction parse_prediction(const std::string & body)
{
  const nlohmann::json args = extract_tool_arguments(body);
  const nlohmann::json schema = function_schema().at("function").at("parameters");
  if (auto violation = schema_violation(schema, args)) {
    throw UnparseablePrediction(*violation, body);
  }
  TrajectoryPrediction out;
  for (std::size_t n = 0; n < kWaypointCount; ++n) {
    const double x = args.at(kCoordinateFields[2 * n]).get<double>();
    const double y = args.at(kCoordinateFields[2 * n + 1]).get<double>();
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw UnparseablePrediction("non-finite waypoint coordinate", body);
    }
    out.waypoints[n] = {x, y};
  }
  out.reason = args.at("reason").get<std::string>();
  if (out.reason.empty()) {
    throw UnparseablePrediction("empty reason", body);
  }
  return out;
}

std::string serialize_prediction(const TrajectoryPrediction & p)
{
  nlohmann::json args = nlohmann::json::object();
  for (std::size_t n = 0; n < kWaypointCount; ++n) {
    args[kCoordinateFields[2 * n]] = p.waypoints[n].x;
    args[kCoordinateFields[2 * n + 1]] = p.waypoints[n].y;
  }
  args["reason"] = p.reason;
  const nlohmann::json call = {
    {"id", "call_0"},
    {"type", "function"},
    {"function", {{"name", kToolName}, {"arguments", args.dump()}}}};
  const nlohmann::json body = {
    {"object", "chat.completion"},
    {"choices",
     nlohmann::json::array(
       {{{"index", 0},
         {"message",
          {{"role", "assistant"}, {"content", nullptr}, {"tool_calls", nlohmann::json::array({call})}}},
         {"finish_reason", "tool_calls"}}})}};
  return body.dump();
}

WaypointVerdict validate_waypoints(const TrajectoryPrediction & p,
                                   const kinematics::VehicleState & current, double y_min,
                                   double y_max, const WaypointLimits & limits)
{
  double prev_x = current.x;
  double prev_y = current.y;
  for (std::size_t i = 0; i < kWaypointCount; ++i) {
    const controllers::Waypoint & w = p.waypoints[i];
    const std::string tag = "waypoint " + std::to_string(i + 1) + ": ";
    const double n = static_cast<double>(i + 1);
    if (!std::isfinite(w.x) || !std::isfinite(w.y)) {
      return {false, tag + "non-finite coordinate"};
    }
    if (w.y < y_min || w.y > y_max) {
      return {false, tag + "y " + format_fixed2(w.y) + " outside road bounds [" +
                       format_fixed2(y_min) + ", " + format_fixed2(y_max) + "]"};
    }
    if (!(w.x > prev_x)) {
      return {false, tag + "backward motion"};
    }
    const double speed = std::hypot(w.x - prev_x, w.y - prev_y) / limits.step_s;
    if (speed > limits.v_max) {
      return {false, tag + "implied speed " + format_fixed2(speed) + " m/s over limit"};
    }
    if (std::abs(w.x - current.x) > 3.0 * limits.v_max * limits.step_s * n) {
      return {false, tag + "jump from current x over limit"};
    }
    prev_x = w.x;
    prev_y = w.y;
  }
  return {true, ""};
}

int target_lane_for(int lane_id, env::MetaAction action, const kinematics::LaneGeometry & lanes)
{
  int target = lane_id;
  if (action == env::MetaAction::LLC) {
    target = lane_id - 1;
  } else if (action == env::MetaAction::RLC) {
    target = lane_id + 1;
  }
  return lanes.has_lane(target) ? target : lane_id;
}

double cubic_ease(double u)
{
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

TrajectoryPrediction mock_predict(const env::Observation & state, env::MetaAction action,
                                  const kinematics::LaneGeometry & lanes, const MockConfig & config)
{
  constexpr double kMinAdvance = 1e-3;
  const kinematics::VehicleState & ego = state.ego;
  const double v = std::clamp(ego.v_x, 0.0, config.v_max);
  const int target = target_lane_for(state.lane_id, action, lanes);
  const double center = lanes.lane_center(target);
  const bool has_leader = state.front_sight_distance < dataset::kNoVehicleInSight;

  TrajectoryPrediction out;
  bool capped = false;
  double prev_advance = 0.0;
  for (std::size_t i = 0; i < kWaypointCount; ++i) {
    const double horizon = static_cast<double>(i + 1) * config.step_s;
    double advance = v * horizon;
    if (has_leader) {
      const double bound =
        state.front_sight_distance - config.min_gap + state.preceding_x_velocity * horizon;
      if (bound < advance) {
        advance = bound;
        capped = true;
      }
    }
    const double u = static_cast<double>(i + 1) / static_cast<double>(kWaypointCount);
    const double y = std::clamp(ego.y + (center - ego.y) * cubic_ease(u), lanes.y_min(),
                                lanes.y_max());
    // keep the per-step displacement, lateral part included, under v_max
    const double prev_y = i == 0 ? ego.y : out.waypoints[i - 1].y;
    const double reach = config.v_max * config.step_s * (1.0 - 1e-9);
    const double dy = y - prev_y;
    const double step_cap = std::sqrt(std::max(reach * reach - dy * dy, 0.0));
    advance = std::min(advance, prev_advance + step_cap);
    advance = std::max(advance, prev_advance + kMinAdvance);
    prev_advance = advance;
    out.waypoints[i] = {ego.x + advance, y};
  }

  out.reason = std::string(env::to_string(action)) + ": " + std::string(command_phrase(action)) +
               " toward lane " + std::to_string(target) + "; ";
  if (capped) {
    out.reason += "speed capped to hold " + format_fixed2(config.min_gap) +
                  " m behind the preceding vehicle at " +
                  format_fixed2(state.preceding_x_velocity) + " m/s";
  } else {
    out.reason += "holding " + format_fixed2(v) + " m/s with no closer leader";
  }
  return out;
}

namespace
{

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

PlanOutcome MockPlanner::plan(const PlanRequest & request)
{
  const auto start = std::chrono::steady_clock::now();
  const PromptBundle bundle = build_prompt(request.state, request.neighbors, request.action);
  PlanOutcome out;
  out.prediction = mock_predict(request.state, request.action, request.lanes, config_);
  out.prompt_hash = prompt_hash(bundle);
  out.latency_s = seconds_since(start);
  return out;
}

LivePlanner::LivePlanner(PlannerEndpoint endpoint, MockConfig fallback)
: endpoint_(std::move(endpoint)), fallback_(fallback)
{
  validate(endpoint_);
}

PlanOutcome LivePlanner::plan(const PlanRequest & request)
{
  const auto start = std::chrono::steady_clock::now();
  const PromptBundle bundle = build_prompt(request.state, request.neighbors, request.action);
  PlanOutcome out;
  out.prompt_hash = prompt_hash(bundle);
  try {
    const RawResponse raw = request_prediction(endpoint_, bundle);
    out.retries = raw.retries;
    TrajectoryPrediction prediction = parse_prediction(raw.body);
    const WaypointVerdict verdict =
      validate_waypoints(prediction, request.state.ego, request.lanes.y_min(),
                         request.lanes.y_max(), {fallback_.v_max, fallback_.step_s});
    if (verdict.accepted) {
      out.prediction = std::move(prediction);
    } else {
      out.fallback = true;
      out.fallback_reason = "rejected: " + verdict.reason;
    }
  } catch (const PlannerError & e) {
    out.retries = e.retries();
    out.fallback = true;
    out.fallback_reason = e.what();
  } catch (const UnparseablePrediction & e) {
    out.fallback = true;
    out.fallback_reason = e.what();
  }
  if (out.fallback) {
    out.prediction = mock_predict(request.state, request.action, request.lanes, fallback_);
  }
  out.latency_s = seconds_since(start);
  return out;
}

}  // namespace lanepilot::planner
