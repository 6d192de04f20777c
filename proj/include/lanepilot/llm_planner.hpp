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

#ifndef LANEPILOT__LLM_PLANNER_HPP_
#define LANEPILOT__LLM_PLANNER_HPP_

#include "lanepilot/controllers.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/kinematics.hpp"
#include "lanepilot/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lanepilot::planner
{

/// Seconds between consecutive predicted waypoints (10 frames at 25 Hz).
inline constexpr double kDefaultStepSeconds = 0.4;
inline constexpr std::size_t kWaypointCount = 3;

struct PromptBundle
{
  std::string role;
  std::string user;
  nlohmann::json tool;

  bool operator==(const PromptBundle &) const = default;
};

struct TrajectoryPrediction
{
  std::array<controllers::Waypoint, kWaypointCount> waypoints{};
  std::string reason;

  bool operator==(const TrajectoryPrediction & other) const;
};

/// Command phrase inserted into the prompt for each meta-action.
std::string_view command_phrase(env::MetaAction action);

/// Fixed two-decimal rendering; "-0.00" is normalized to "0.00".
std::string format_fixed2(double value);

std::string role_text();

/// One line per neighbor:
///   "[k] t+1: dx=.., y=.., vx=.., vy=..; t+2: ...; t+3: ..."
std::string serialize_neighbors(std::span<const retrieval::KnowledgeRecord> neighbors);

/// Up to three neighbors, padded by repeating the nearest one. An empty list renders "none".
PromptBundle build_prompt(const env::Observation & state,
                          std::span<const retrieval::KnowledgeRecord> neighbors,
                          env::MetaAction action);

/// Tool descriptor in the chat-completions convention:
///   {"type": "function", "function": {"name", "description", "parameters": <object schema>}}
nlohmann::json function_schema();

/// Checks args against the subset of JSON Schema used by the tool descriptors:
/// object / number / string / enum / required. Returns a violation message or nullopt.
std::optional<std::string> schema_violation(const nlohmann::json & parameters,
                                            const nlohmann::json & args);

/// FNV-1a 64 over role, a newline, and user text.
std::uint64_t prompt_hash(const PromptBundle & bundle);
std::string hash_hex(std::uint64_t hash);

struct PlannerEndpoint
{
  /// scheme://host[:port]
  std::string base_url{"http://127.0.0.1:8080"};
  std::string path{"/v1/chat/completions"};
  std::string model{"gpt-4o-mini"};
  /// Name of the environment variable that holds the bearer token. Empty: no auth header.
  std::string api_key_env{"OPENAI_API_KEY"};
  double timeout_s{30.0};
  int retries{2};
  double backoff_initial_s{0.5};
};

void validate(const PlannerEndpoint & endpoint);

/// Request body: model, system + user messages, the tool, and a forced tool_choice.
nlohmann::json build_request_body(const PlannerEndpoint & endpoint, const PromptBundle & bundle);

enum class PlannerErrorKind { Timeout, Transport, HttpStatus, RetriesExhausted };
std::string_view to_string(PlannerErrorKind kind);

class PlannerError : public std::runtime_error
{
public:
  PlannerError(PlannerErrorKind kind, const std::string & what, int status = 0,
               int retries = 0);

  PlannerErrorKind kind() const { return kind_; }
  /// Last HTTP status seen (0 when no response arrived).
  int status() const { return status_; }
  int retries() const { return retries_; }

private:
  PlannerErrorKind kind_;
  int status_;
  int retries_;
};

struct RawResponse
{
  std::string body;
  int status{0};
  double latency_s{0.0};
  int retries{0};
};

/// Blocking POST with retries on transport failures and 5xx, exponential backoff
/// (backoff_initial_s * 2^k). 4xx responses fail immediately with HttpStatus.
RawResponse request_prediction(const PlannerEndpoint & endpoint, const nlohmann::json & body);
RawResponse request_prediction(const PlannerEndpoint & endpoint, const PromptBundle & bundle);

class UnparseablePrediction : public std::runtime_error
{
public:
  UnparseablePrediction(const std::string & what, std::string raw);
  const std::string & raw() const { return raw_; }

private:
  std::string raw_;
};

/// Arguments object of the first tool call in a chat-completions response body.
/// Throws UnparseablePrediction when absent or not a JSON object.
nlohmann::json extract_tool_arguments(const std::string & body);

TrajectoryPrediction parse_prediction(const std::string & body);

/// Chat-completions response body carrying the prediction as a tool call.
std::string serialize_prediction(const TrajectoryPrediction & prediction);

struct WaypointLimits
{
  double v_max{50.0};
  double step_s{kDefaultStepSeconds};
};

struct WaypointVerdict
{
  bool accepted{true};
  std::string reason;
};

/// Rejects on: non-finite values, y outside [y_min, y_max], x not strictly increasing from
/// the current x, implied speed over v_max, or a jump beyond 3 * v_max * step * n.
WaypointVerdict validate_waypoints(const TrajectoryPrediction & prediction,
                                   const kinematics::VehicleState & current, double y_min,
                                   double y_max, const WaypointLimits & limits = {});

struct MockConfig
{
  double step_s{kDefaultStepSeconds};
  double min_gap{10.0};
  double v_max{50.0};
};

/// Lane the action steers toward: adjacent lane for LLC/RLC when it exists, else current.
int target_lane_for(int lane_id, env::MetaAction action, const kinematics::LaneGeometry & lanes);

/// Smoothstep 3u^2 - 2u^3 on [0, 1].
double cubic_ease(double u);

/// Deterministic kinematic planner.
///   x_n = x + n * step * v_x, capped so the front gap stays >= min_gap given the leader speed
///   y_n eases from y toward the target lane center, arriving on the third waypoint
/// Output always passes validate_waypoints with limits built from the same config.
TrajectoryPrediction mock_predict(const env::Observation & state, env::MetaAction action,
                                  const kinematics::LaneGeometry & lanes,
                                  const MockConfig & config = {});

/// Result of one planning call, whatever the backend.
struct PlanOutcome
{
  TrajectoryPrediction prediction;
  std::uint64_t prompt_hash{0};
  /// Wall-clock time spent in the backend call.
  double latency_s{0.0};
  int retries{0};
  /// Live output was unusable and mock_predict stood in.
  bool fallback{false};
  std::string fallback_reason;
};

struct PlanRequest
{
  const env::Observation & state;
  env::MetaAction action;
  std::span<const retrieval::KnowledgeRecord> neighbors;
  const kinematics::LaneGeometry & lanes;
};

class TrajectoryPlanner
{
public:
  virtual ~TrajectoryPlanner() = default;
  virtual PlanOutcome plan(const PlanRequest & request) = 0;
  virtual std::string_view name() const = 0;
};

class MockPlanner : public TrajectoryPlanner
{
public:
  explicit MockPlanner(MockConfig config = {}) : config_(config) {}
  PlanOutcome plan(const PlanRequest & request) override;
  std::string_view name() const override { return "mock"; }

private:
  MockConfig config_;
};

/// Queries the endpoint; transport failures, unparseable bodies and rejected waypoints all
/// fall back to mock_predict with the cause recorded on the outcome.
class LivePlanner : public TrajectoryPlanner
{
public:
  LivePlanner(PlannerEndpoint endpoint, MockConfig fallback = {});
  PlanOutcome plan(const PlanRequest & request) override;
  std::string_view name() const override { return "live"; }

private:
  PlannerEndpoint endpoint_;
  MockConfig fallback_;
};

}  // namespace lanepilot::planner

#endif  // LANEPILOT__LLM_PLANNER_HPP_
