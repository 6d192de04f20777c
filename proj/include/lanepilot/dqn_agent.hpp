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

#ifndef LANEPILOT__DQN_AGENT_HPP_
#define LANEPILOT__DQN_AGENT_HPP_

#include "lanepilot/environment.hpp"
#include "lanepilot/neural.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace lanepilot::dqn
{

struct Transition
{
  env::ObservationVector state{};
  env::MetaAction action{env::MetaAction::LK};
  double reward{0.0};
  env::ObservationVector next_state{};
  bool done{false};
};

/// Fixed-capacity ring buffer; the oldest transition is evicted first.
class ReplayBuffer
{
public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Transition & t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th transition counted from the oldest one still stored.
  const Transition & at(std::size_t i) const;

  /// Uniform sample without replacement inside the batch. Throws if count > size().
  std::vector<Transition> sample(std::size_t count, std::mt19937_64 & rng) const;

private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_{0};  // slot the next push overwrites once full
};

/// Linear decay from start to end over decay_steps decisions, then flat.
struct EpsilonSchedule
{
  double start{1.0};
  double end{0.05};
  std::int64_t decay_steps{10000};

  double at(std::int64_t step) const;
};

struct AgentConfig
{
  double gamma{0.99};
  EpsilonSchedule epsilon;
  std::size_t batch_size{64};
  std::int64_t target_sync_period{1000};
  double learning_rate{1e-3};
  std::size_t replay_capacity{100000};
  std::vector<int> hidden_layers{128, 128};
  /// Transitions stored before the first gradient step.
  std::size_t learning_starts{500};
  std::uint64_t seed{0};
};

void validate(const AgentConfig & config);

/// argmax with ties broken toward the lowest action index.
env::MetaAction greedy_action(const Eigen::VectorXd & q_values);

Eigen::VectorXd to_eigen(const env::ObservationVector & v);

/// Vanilla DQN: online network, frozen target copy, uniform replay, Adam.
class DqnAgent
{
public:
  explicit DqnAgent(AgentConfig config);
  /// Wraps an existing network (loaded checkpoint, hand-built test nets).
  DqnAgent(AgentConfig config, neural::Mlp online);

  /// Epsilon-greedy. Draws from the agent's own seeded generator.
  env::MetaAction select_action(const env::ObservationVector & obs, double epsilon);

  /// y = r for terminal transitions, else r + gamma * max_a' Q_target(s', a').
  double td_target(double reward, const env::ObservationVector & next_state, bool done) const;

  /// One Adam step on mean((y - Q(s, a))^2). Targets come from the target network and
  /// carry no gradient. Syncs the target every target_sync_period gradient steps.
  /// Returns the loss measured before the update.
  double train_step(std::span<const Transition> batch);

  /// Copies the online parameters into the target network.
  void sync_target();

  /// Stores a transition and, once learning has started, trains on a replay batch.
  /// Returns the loss when a gradient step ran.
  std::optional<double> observe(const Transition & t);

  const neural::Mlp & online() const { return online_; }
  const neural::Mlp & target() const { return target_; }
  neural::Mlp & mutable_online() { return online_; }
  const AgentConfig & config() const { return config_; }
  const ReplayBuffer & replay() const { return replay_; }
  std::int64_t gradient_steps() const { return gradient_steps_; }
  /// Gradient-step counts at which automatic syncs happened.
  const std::vector<std::int64_t> & sync_history() const { return sync_history_; }

private:
  AgentConfig config_;
  neural::Mlp online_;
  neural::Mlp target_;
  neural::Adam optimizer_;
  ReplayBuffer replay_;
  std::mt19937_64 rng_;
  std::int64_t gradient_steps_{0};
  std::vector<std::int64_t> sync_history_;
};

/// Everything needed to run one training or evaluation episode.
struct EpisodeSetup
{
  std::shared_ptr<const dataset::TrackTable> table;
  env::SimConfig sim;
  env::EpisodeSpec spec;
};
using EnvFactory = std::function<EpisodeSetup(int episode)>;

struct TrainConfig
{
  int episodes{500};
  AgentConfig agent;
};

struct EpisodeStats
{
  int episode{0};
  /// Undiscounted sum of per-frame rewards.
  double episode_return{0.0};
  bool collided{false};
  std::int64_t decisions{0};
  double epsilon{0.0};
  double mean_speed{0.0};
};

struct TrainResult
{
  std::unique_ptr<DqnAgent> agent;
  std::vector<EpisodeStats> curve;
};

/// Episodic DQN training: one decision every decision_period frames, epsilon annealed per
/// decision, one replay update per decision once learning has started.
TrainResult train(const EnvFactory & factory, const TrainConfig & config);

using Policy = std::function<env::MetaAction(const env::Observation &)>;

struct EvaluationStats
{
  int episodes{0};
  int collisions{0};
  double mean_return{0.0};
  double mean_speed{0.0};
  std::vector<EpisodeStats> per_episode;
};

EvaluationStats evaluate_policy(const EnvFactory & factory, int episodes, const Policy & policy,
                                int first_episode = 0);

/// Uniform random policy with its own seeded generator.
Policy random_policy(std::uint64_t seed);
/// Greedy policy over a frozen copy of the network.
Policy greedy_policy(const neural::Mlp & net, double v_max = 50.0);

}  // namespace lanepilot::dqn

#endif  // LANEPILOT__DQN_AGENT_HPP_
