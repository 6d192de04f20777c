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

#ifndef LANEPILOT__SCENARIOS_HPP_
#define LANEPILOT__SCENARIOS_HPP_

#include "lanepilot/dqn_agent.hpp"
#include "lanepilot/retrieval.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lanepilot::scenarios
{

inline constexpr std::string_view kSlowLeader = "slow_leader_3lanes";
inline constexpr std::string_view kOpenRoad = "open_road";

/// Three-lane road, ego in the middle lane behind a slow scripted leader, seeded IDM traffic
/// in the outer lanes only.
struct SlowLeaderParams
{
  double ego_x{60.0};
  double ego_speed{25.0};
  double leader_gap_min{35.0};
  double leader_gap_max{60.0};
  double leader_speed_min{12.0};
  double leader_speed_max{18.0};
  int traffic_min{8};
  int traffic_max{16};
  double traffic_x_min{0.0};
  double traffic_x_max{420.0};
  double traffic_speed_min{22.0};
  double traffic_speed_max{33.0};
};

dqn::EpisodeSetup slow_leader(std::uint64_t seed, const env::SimConfig & sim,
                              const SlowLeaderParams & params = {});

/// Empty three-lane road, ego in lane 2.
dqn::EpisodeSetup open_road(std::uint64_t seed, const env::SimConfig & sim,
                            double ego_speed = 25.0);

std::vector<std::string> scenario_names();

/// Throws std::invalid_argument on an unknown name.
dqn::EpisodeSetup make_scenario(std::string_view name, std::uint64_t seed,
                                const env::SimConfig & sim);

/// Seeds 0..count-1.
std::vector<std::uint64_t> evaluation_seeds(int count = 25);

/// Training episodes draw scenario seeds disjoint from the evaluation range.
std::uint64_t training_scenario_seed(std::uint64_t train_seed, int episode);

dqn::EnvFactory training_factory(std::string_view name, std::uint64_t train_seed,
                                 const env::SimConfig & sim);

/// Index over records extracted from `recordings` synthetic tables of the named scenario.
retrieval::KnnIndex build_knowledge_index(std::string_view name, int recordings,
                                          const env::SimConfig & sim,
                                          std::int64_t stride_frames = 5);

}  // namespace lanepilot::scenarios

#endif  // LANEPILOT__SCENARIOS_HPP_
