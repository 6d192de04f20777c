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

#ifndef LANEPILOT__SAFETY_ARBITER_HPP_
#define LANEPILOT__SAFETY_ARBITER_HPP_

#include "lanepilot/controllers.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/llm_planner.hpp"
#include "lanepilot/retrieval.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace lanepilot::safety
{

struct ArbiterDecision
{
  env::MetaAction rl_action{env::MetaAction::LK};
  env::MetaAction llm_action{env::MetaAction::LK};
  env::MetaAction executed{env::MetaAction::LK};
  bool agreed{true};

  bool operator==(const ArbiterDecision &) const = default;
};

/// Execute the shared action on agreement, lane keeping otherwise.
ArbiterDecision consensus(env::MetaAction rl_action, env::MetaAction llm_action);

/// Wire names of the enum field: "left", "right", "keep".
std::string_view wire_name(env::MetaAction action);
std::optional<env::MetaAction> from_wire_name(std::string_view name);

/// Tool descriptor with a single required enum field "action".
nlohmann::json action_schema();

/// Prompt for an independent action choice; carries no RL command.
planner::PromptBundle build_safety_prompt(const env::Observation & state,
                                          std::span<const retrieval::KnowledgeRecord> neighbors);

/// Action from a chat-completions body. Throws planner::UnparseablePrediction.
env::MetaAction parse_action_response(const std::string & body);
std::string serialize_action_response(env::MetaAction action);

struct SafetyRuleConfig
{
  controllers::IdmParams idm;
  /// Adjacent-lane front gap must exceed this multiple of s*.
  double front_gap_factor{1.5};
};

/// Gap rule: keep unless the front gap is below s*(v, v_lead) and an adjacent lane offers a
/// front gap above front_gap_factor * s* and a back gap above s0. Left is tried first.
env::MetaAction rule_action(const env::Observation & state, const SafetyRuleConfig & config = {});

struct ActionQueryResult
{
  env::MetaAction action{env::MetaAction::LK};
  std::uint64_t prompt_hash{0};
  double latency_s{0.0};
  int retries{0};
  bool fallback{false};
  std::string fallback_reason;
};

class ActionAdvisor
{
public:
  virtual ~ActionAdvisor() = default;
  virtual ActionQueryResult query(const env::Observation & state,
                                  std::span<const retrieval::KnowledgeRecord> neighbors) = 0;
  virtual std::string_view name() const = 0;
};

class MockAdvisor : public ActionAdvisor
{
public:
  explicit MockAdvisor(SafetyRuleConfig config = {}) : config_(config) {}
  ActionQueryResult query(const env::Observation & state,
                          std::span<const retrieval::KnowledgeRecord> neighbors) override;
  std::string_view name() const override { return "mock"; }

private:
  SafetyRuleConfig config_;
};

/// Live query. Transport failures and unparseable bodies resolve to LK with the cause recorded.
class LiveAdvisor : public ActionAdvisor
{
public:
  explicit LiveAdvisor(planner::PlannerEndpoint endpoint);
  ActionQueryResult query(const env::Observation & state,
                          std::span<const retrieval::KnowledgeRecord> neighbors) override;
  std::string_view name() const override { return "live"; }

private:
  planner::PlannerEndpoint endpoint_;
};

/// How often the advisor is consulted.
enum class QueryCadence { OnLaneChange, EveryDecision };

struct ArbiterConfig
{
  SafetyRuleConfig rule;
  QueryCadence cadence{QueryCadence::OnLaneChange};
};

struct ArbitrationRecord
{
  ArbiterDecision decision;
  std::optional<ActionQueryResult> query;
};

/// Consults the advisor per the cadence, then applies consensus. Without a query the RL
/// action stands (only LK reaches here under the default cadence).
ArbitrationRecord arbitrate(ActionAdvisor & advisor, QueryCadence cadence,
                            env::MetaAction rl_action, const env::Observation & state,
                            std::span<const retrieval::KnowledgeRecord> neighbors);

}  // namespace lanepilot::safety

#endif  // LANEPILOT__SAFETY_ARBITER_HPP_
