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

#include "lanepilot/dqn_agent.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace lanepilot::dqn
{

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity)
{
  if (capacity_ == 0) {
    throw std::invalid_argument("replay capacity must be positive");
  }
}

void ReplayBuffer::push(const Transition & t)
{
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition & ReplayBuffer::at(std::size_t i) const
{
  if (i >= data_.size()) {
    throw std::out_of_range("replay index " + std::to_string(i));
  }
  return data_[(head_ + i) % data_.size()];
}

std::vector<Transition> ReplayBuffer::sample(std::size_t count, std::mt19937_64 & rng) const
{
  if (count > data_.size()) {
    throw std::invalid_argument("cannot sample more transitions than stored");
  }
  // partial Fisher-Yates over indices
  std::vector<std::size_t> idx(data_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Transition> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(data_[idx[i]]);
  }
  return out;
}

double EpsilonSchedule::at(std::int64_t step) const
{
  if (decay_steps <= 0 || step >= decay_steps) {
    return end;
  }
  const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) /
                      static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void validate(const AgentConfig & c)
{
  if (c.gamma < 0.0 || c.gamma > 1.0) {
    throw std::invalid_argument("discount must lie in [0, 1]");
  }
  if (c.batch_size == 0 || c.target_sync_period <= 0 || !(c.learning_rate > 0.0)) {
    throw std::invalid_argument("batch size, sync period and learning rate must be positive");
  }
  if (c.epsilon.start < 0.0 || c.epsilon.start > 1.0 || c.epsilon.end < 0.0 || c.epsilon.end > 1.0) {
    throw std::invalid_argument("epsilon schedule must stay inside [0, 1]");
  }
}

env::MetaAction greedy_action(const Eigen::VectorXd & q)
{
  if (q.size() != env::kActionCount) {
    throw std::invalid_argument("expected one Q-value per meta-action");
  }
  int best = 0;
  for (int a = 1; a < env::kActionCount; ++a) {
    if (q(a) > q(best)) {
      best = a;
    }
  }
  return env::action_from_index(best);
}

Eigen::VectorXd to_eigen(const env::ObservationVector & v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace
{

std::vector<int> layer_sizes(const AgentConfig & c)
{
  std::vector<int> sizes{static_cast<int>(env::kObservationWidth)};
  sizes.insert(sizes.end(), c.hidden_layers.begin(), c.hidden_layers.end());
  sizes.push_back(env::kActionCount);
  return sizes;
}

}  // namespace

DqnAgent::DqnAgent(AgentConfig config)
: DqnAgent(config, neural::Mlp(layer_sizes(config), config.seed))
{
}

DqnAgent::DqnAgent(AgentConfig config, neural::Mlp online)
: config_(std::move(config)),
  online_(std::move(online)),
  target_(online_),
  optimizer_(neural::AdamConfig{config_.learning_rate}),
  replay_(config_.replay_capacity),
  rng_(config_.seed ^ 0x9e3779b97f4a7c15ULL)
{
  validate(config_);
  if (online_.output_width() != env::kActionCount) {
    throw std::invalid_argument("Q-network output width must equal the action count");
  }
}

env::MetaAction DqnAgent::select_action(const env::ObservationVector & obs, double epsilon)
{
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng_) < epsilon) {
    std::uniform_int_distribution<int> pick(0, env::kActionCount - 1);
    return env::action_from_index(pick(rng_));
  }
  return greedy_action(online_.forward(to_eigen(obs)));
}

double DqnAgent::td_target(double reward, const env::ObservationVector & next_state, bool done) const
{
  if (done) {
    return reward;
  }
  return reward + config_.gamma * target_.forward(to_eigen(next_state)).maxCoeff();
}

double DqnAgent::train_step(std::span<const Transition> batch)
{
  if (batch.empty()) {
    throw std::invalid_argument("train_step needs a non-empty batch");
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  const auto width = static_cast<Eigen::Index>(env::kObservationWidth);
  Eigen::MatrixXd states(width, n);
  Eigen::MatrixXd next_states(width, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = to_eigen(batch[static_cast<std::size_t>(i)].state);
    next_states.col(i) = to_eigen(batch[static_cast<std::size_t>(i)].next_state);
  }
  const Eigen::MatrixXd next_q = target_.forward_batch(next_states).output;
  const neural::ForwardCache cache = online_.forward_batch(states);

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(env::kActionCount, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition & t = batch[static_cast<std::size_t>(i)];
    const double y = t.done ? t.reward : t.reward + config_.gamma * next_q.col(i).maxCoeff();
    const int a = env::to_index(t.action);
    const double err = y - cache.output(a, i);
    loss += err * err;
    grad(a, i) = -2.0 * err / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);

  const neural::LayerStack grads = online_.backward(cache, grad);
  optimizer_.update(online_.layers(), grads);
  ++gradient_steps_;
  if (gradient_steps_ % config_.target_sync_period == 0) {
    sync_target();
    sync_history_.push_back(gradient_steps_);
  }
  return loss;
}

void DqnAgent::sync_target() { target_ = online_; }

std::optional<double> DqnAgent::observe(const Transition & t)
{
  replay_.push(t);
  if (replay_.size() < std::max(config_.learning_starts, config_.batch_size)) {
    return std::nullopt;
  }
  const std::vector<Transition> batch = replay_.sample(config_.batch_size, rng_);
  return train_step(batch);
}

TrainResult train(const EnvFactory & factory, const TrainConfig & config)
{
  TrainResult result;
  result.agent = std::make_unique<DqnAgent>(config.agent);
  DqnAgent & agent = *result.agent;
  std::int64_t decision_count = 0;
  for (int episode = 0; episode < config.episodes; ++episode) {
    EpisodeSetup setup = factory(episode);
    env::HighwayEnv environment(setup.table, setup.sim);
    env::Observation obs = environment.reset(setup.spec);
    env::ObservationVector state = env::normalize(obs, setup.sim.v_max);

    EpisodeStats stats;
    stats.episode = episode;
    double speed_sum = 0.0;
    std::int64_t frames = 0;
    bool done = false;
    while (!done) {
      const double eps = config.agent.epsilon.at(decision_count);
      const env::MetaAction action = agent.select_action(state, eps);
      const env::DecisionResult d = env::step_decision(environment, action);
      const env::ObservationVector next_state = env::normalize(d.observation, setup.sim.v_max);
      // episodes cut by the time limit are not terminal for bootstrapping
      const bool terminal = d.collided || d.road_exit;
      agent.observe({state, action, d.reward, next_state, terminal});
      stats.episode_return += d.reward;
      stats.collided = stats.collided || d.collided;
      stats.epsilon = eps;
      speed_sum += d.observation.ego.v_x * d.frames;
      frames += d.frames;
      ++stats.decisions;
      ++decision_count;
      state = next_state;
      done = d.done;
    }
    stats.mean_speed = frames > 0 ? speed_sum / static_cast<double>(frames) : 0.0;
    result.curve.push_back(stats);
  }
  return result;
}

EvaluationStats evaluate_policy(const EnvFactory & factory, int episodes, const Policy & policy,
                                int first_episode)
{
  EvaluationStats out;
  out.episodes = episodes;
  double return_sum = 0.0;
  double speed_sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    EpisodeSetup setup = factory(first_episode + e);
    env::HighwayEnv environment(setup.table, setup.sim);
    env::Observation obs = environment.reset(setup.spec);
    EpisodeStats stats;
    stats.episode = first_episode + e;
    double ep_speed = 0.0;
    std::int64_t frames = 0;
    bool done = false;
    while (!done) {
      const env::DecisionResult d = env::step_decision(environment, policy(obs));
      stats.episode_return += d.reward;
      stats.collided = stats.collided || d.collided;
      ep_speed += d.observation.ego.v_x * d.frames;
      frames += d.frames;
      ++stats.decisions;
      obs = d.observation;
      done = d.done;
    }
    stats.mean_speed = frames > 0 ? ep_speed / static_cast<double>(frames) : 0.0;
    out.collisions += stats.collided ? 1 : 0;
    return_sum += stats.episode_return;
    speed_sum += stats.mean_speed;
    out.per_episode.push_back(stats);
  }
  if (episodes > 0) {
    out.mean_return = return_sum / episodes;
    out.mean_speed = speed_sum / episodes;
  }
  return out;
}

Policy random_policy(std::uint64_t seed)
{
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](const env::Observation &) {
    std::uniform_int_distribution<int> pick(0, env::kActionCount - 1);
    return env::action_from_index(pick(*rng));
  };
}

Policy greedy_policy(const neural::Mlp & net, double v_max)
{
  auto frozen = std::make_shared<const neural::Mlp>(net);
  return [frozen, v_max](const env::Observation & obs) {
    return greedy_action(frozen->forward(to_eigen(env::normalize(obs, v_max))));
  };
}

}  // namespace lanepilot::dqn
