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

#include "lanepilot/scenarios.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>

namespace lanepilot::scenarios
{

namespace
{

constexpr std::uint64_t kTrainingSeedBase = 1'000'000;
constexpr std::uint64_t kKnowledgeSeedBase = 5'000'000;

dataset::ScenarioSpec base_spec(std::uint64_t seed, const env::SimConfig & sim)
{
  dataset::ScenarioSpec spec;
  spec.lane_count = 3;
  spec.lane_width = 4.0;
  spec.road_left_y = 88.0;
  spec.frame_rate = 1.0 / sim.dt;
  spec.duration = sim.episode_frames + 2;
  spec.seed = seed;
  return spec;
}

}  // namespace

dqn::EpisodeSetup slow_leader(std::uint64_t seed, const env::SimConfig & sim,
                              const SlowLeaderParams & p)
{
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x5851f42d4c957f2dULL);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  dataset::ScenarioSpec spec = base_spec(seed, sim);
  dataset::VehicleBehavior leader;
  leader.id = 1;
  leader.lane_id = 2;
  leader.x0 = p.ego_x + uniform(p.leader_gap_min, p.leader_gap_max);
  leader.v0 = uniform(p.leader_speed_min, p.leader_speed_max);
  spec.vehicles.push_back(leader);

  spec.random_traffic.count =
    std::uniform_int_distribution<int>(p.traffic_min, p.traffic_max)(rng);
  spec.random_traffic.x_min = p.traffic_x_min;
  spec.random_traffic.x_max = p.traffic_x_max;
  spec.random_traffic.v_min = p.traffic_speed_min;
  spec.random_traffic.v_max = p.traffic_speed_max;
  spec.random_traffic.lane_ids = {1, 3};

  dqn::EpisodeSetup setup;
  setup.table = std::make_shared<const dataset::TrackTable>(dataset::synth_scenario(spec));
  setup.sim = sim;
  setup.sim.seed = seed;
  setup.spec = {0, 2, p.ego_x, p.ego_speed};
  return setup;
}

dqn::EpisodeSetup open_road(std::uint64_t seed, const env::SimConfig & sim, double ego_speed)
{
  dataset::ScenarioSpec spec = base_spec(seed, sim);
  dqn::EpisodeSetup setup;
  setup.table = std::make_shared<const dataset::TrackTable>(dataset::synth_scenario(spec));
  setup.sim = sim;
  setup.sim.seed = seed;
  setup.spec = {0, 2, 0.0, ego_speed};
  return setup;
}

std::vector<std::string> scenario_names()
{
  return {std::string(kSlowLeader), std::string(kOpenRoad)};
}

dqn::EpisodeSetup make_scenario(std::string_view name, std::uint64_t seed,
                                const env::SimConfig & sim)
{
  if (name == kSlowLeader) {
    return slow_leader(seed, sim);
  }
  if (name == kOpenRoad) {
    return open_road(seed, sim);
  }
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::vector<std::uint64_t> evaluation_seeds(int count)
{
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < count; ++i) {
    seeds.push_back(static_cast<std::uint64_t>(i));
  }
  return seeds;
}

std::uint64_t training_scenario_seed(std::uint64_t train_seed, int episode)
{
  return kTrainingSeedBase + train_seed * 100'000 + static_cast<std::uint64_t>(episode);
}

dqn::EnvFactory training_factory(std::string_view name, std::uint64_t train_seed,
                                 const env::SimConfig & sim)
{
  return [name = std::string(name), train_seed, sim](int episode) {
    return make_scenario(name, training_scenario_seed(train_seed, episode), sim);
  };
}

retrieval::KnnIndex build_knowledge_index(std::string_view name, int recordings,
                                          const env::SimConfig & sim, std::int64_t stride_frames)
{
  if (recordings < 1) {
    throw std::invalid_argument("knowledge base needs at least one recording");
  }
  std::vector<retrieval::KnowledgeRecord> records;
  for (int r = 0; r < recordings; ++r) {
    const dqn::EpisodeSetup setup =
      make_scenario(name, kKnowledgeSeedBase + static_cast<std::uint64_t>(r), sim);
    auto part = retrieval::extract_records(*setup.table, r, 10, stride_frames);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  return retrieval::KnnIndex::build(std::move(records));
}

}  // namespace lanepilot::scenarios
