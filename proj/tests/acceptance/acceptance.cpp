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

// Acceptance suite. One PASS/FAIL line per criterion; tolerances are pinned below.
//   lanepilot_acceptance [--criterion N]

#include "lanepilot/controllers.hpp"
#include "lanepilot/dqn_agent.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/experiments.hpp"
#include "lanepilot/llm_planner.hpp"
#include "lanepilot/neural.hpp"
#include "lanepilot/retrieval.hpp"
#include "lanepilot/safety_arbiter.hpp"
#include "lanepilot/scenarios.hpp"

#include "golden_inputs.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace
{

namespace ctl = lanepilot::controllers;
namespace dqn = lanepilot::dqn;
namespace env = lanepilot::env;
namespace ex = lanepilot::experiments;
namespace nn = lanepilot::neural;
namespace pl = lanepilot::planner;
namespace rt = lanepilot::retrieval;
namespace sc = lanepilot::scenarios;
namespace sf = lanepilot::safety;
namespace lt = lanepilot::testing;

// Pinned tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetS = 5.0;
constexpr double kLearningGain = 1.5;
constexpr double kCollisionRatio = 0.5;
constexpr double kTrainBudgetS = 600.0;
constexpr double kFollowGapRelTol = 0.01;
constexpr double kFreeAccelTol = 1e-6;
constexpr double kCruiseAccelTol = 1e-3;
constexpr double kSettleBandM = 0.1;
constexpr double kSettleBudgetS = 5.0;
constexpr double kKnnBudgetS = 1.0;
constexpr double kMockTrackTolM = 0.2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects sub-checks of one criterion and prints them as indented detail lines.
class Verdict
{
public:
  void check(bool ok, const std::string & what)
  {
    std::printf("    [%s] %s\n", ok ? "ok" : "miss", what.c_str());
    pass_ = pass_ && ok;
  }
  void note(const std::string & what) { std::printf("    %s\n", what.c_str()); }
  bool pass() const { return pass_; }

private:
  bool pass_{true};
};

std::string fmt(const char * f, double a, double b = 0.0, double c = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

dqn::EnvFactory evaluation_factory(std::string_view name, const env::SimConfig & sim)
{
  return [name = std::string(name), sim](int episode) {
    return sc::make_scenario(name, static_cast<std::uint64_t>(episode), sim);
  };
}

dqn::TrainResult train_reference_agent(double * elapsed_s)
{
  const ex::ExperimentConfig cfg;
  dqn::TrainConfig tc{cfg.train_episodes, cfg.agent};
  tc.agent.seed = 0;
  const auto t0 = Clock::now();
  dqn::TrainResult r = dqn::train(sc::training_factory(sc::kSlowLeader, 0, cfg.sim), tc);
  if (elapsed_s != nullptr) {
    *elapsed_s = seconds_since(t0);
  }
  return r;
}

// 1. Backpropagation agrees with central differences on the Q-network shape.
void criterion_1(Verdict & v)
{
  const auto t0 = Clock::now();
  const nn::Mlp net({25, 16, 3}, 11);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd inputs(25, 8);
  Eigen::MatrixXd grad(3, 8);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) {
    inputs.data()[i] = u(rng);
  }
  for (Eigen::Index i = 0; i < grad.size(); ++i) {
    grad.data()[i] = u(rng);
  }
  const double err = lt::gradient_check_max_relative_error(net, inputs, grad);
  const double elapsed = seconds_since(t0);
  v.check(err < kGradRelTol, fmt("max relative error %.3e < %.0e", err, kGradRelTol));
  v.check(elapsed < kGradBudgetS, fmt("elapsed %.3f s < %.0f s", elapsed, kGradBudgetS));
}

// 2. Training improves the return and the greedy policy collides less than a random one.
void criterion_2(Verdict & v)
{
  double elapsed = 0.0;
  const dqn::TrainResult r = train_reference_agent(&elapsed);
  const auto mean_return = [&](std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) {
      s += r.curve[i].episode_return;
    }
    return s / static_cast<double>(to - from);
  };
  const std::size_t n = r.curve.size();
  v.check(n == 500, "trained 500 episodes (" + std::to_string(n) + ")");
  if (n < 100) {
    v.check(false, "curve too short");
    return;
  }
  const double first = mean_return(0, 50);
  const double last = mean_return(n - 50, n);
  v.check(last >= kLearningGain * first,
          fmt("mean return last 50 %.2f >= %.1f x first 50 %.2f", last, kLearningGain, first));

  const env::SimConfig sim = ex::ExperimentConfig{}.sim;
  const auto factory = evaluation_factory(sc::kSlowLeader, sim);
  const dqn::EvaluationStats greedy =
    dqn::evaluate_policy(factory, 25, dqn::greedy_policy(r.agent->online(), sim.v_max));
  const dqn::EvaluationStats random = dqn::evaluate_policy(factory, 25, dqn::random_policy(0));
  v.check(greedy.collisions <= kCollisionRatio * random.collisions,
          fmt("greedy collisions %.0f <= %.1f x random collisions %.0f", greedy.collisions,
              kCollisionRatio, random.collisions));
  v.check(elapsed < kTrainBudgetS, fmt("training %.1f s < %.0f s", elapsed, kTrainBudgetS));
}

// 3. Car following behind a constant-speed leader settles at the desired gap.
void criterion_3(Verdict & v)
{
  const ctl::IdmParams p;
  const double v_lead = 25.0;
  const double initial_gap = 100.0;
  const std::int64_t frames = 3000;  // 120 s at 25 Hz
  const double ego_x = 50.0;
  auto lead = lt::cruiser(1, 2, ego_x + initial_gap + 4.5, v_lead);
  dqn::EpisodeSetup setup = lt::scripted_setup({lead}, {0, 2, ego_x, v_lead}, frames);
  env::HighwayEnv world(setup.table, setup.sim);
  world.reset(setup.spec);
  const double gap0 = world.leader_in_lane(2).first;
  v.note(fmt("initial bumper gap %.3f m", gap0));
  bool collided = false;
  while (!world.done()) {
    const bool hit = world.step(env::MetaAction::LK).info.collided;
    collided = collided || hit;
  }
  const auto [gap, speed] = world.leader_in_lane(2);
  const double ego_v = world.ego().v_x;
  const double s_star = ctl::desired_gap(p, ego_v, speed);
  const double rel = std::abs(gap - s_star) / s_star;
  const double ratio = ego_v / p.desired_velocity;
  const double equilibrium = s_star / std::sqrt(1.0 - ratio * ratio * ratio * ratio);
  v.check(rel < kFollowGapRelTol,
          fmt("final gap %.3f m vs s* %.3f m, relative deviation %.4f", gap, s_star, rel) +
            fmt(" < %.2f", kFollowGapRelTol));
  v.note(fmt("ego speed %.4f m/s; zero-acceleration gap for this speed %.3f m (deviation %.2e)",
             ego_v, equilibrium, std::abs(gap - equilibrium) / equilibrium));
  v.check(!collided, "no collision during the run");
  const double a_free = ctl::idm_accel(p, 0.0, 0.0, std::numeric_limits<double>::infinity());
  v.check(std::abs(a_free - p.max_acceleration) < kFreeAccelTol,
          fmt("a(v=0, free road) = %.9f, expected %.1f", a_free, p.max_acceleration));
  const double a_cruise = ctl::idm_accel(p, p.desired_velocity, p.desired_velocity,
                                         std::numeric_limits<double>::infinity());
  v.check(a_cruise <= 0.0 && a_cruise > -kCruiseAccelTol,
          fmt("a(v=v_d, free road) = %.3e in (-%.0e, 0]", a_cruise, kCruiseAccelTol));
}

// 4. A single lane change under the lateral PID settles within the band in time.
void criterion_4(Verdict & v)
{
  dqn::EpisodeSetup setup = lt::scripted_setup({}, {0, 2, 0.0, 25.0}, 200);
  env::HighwayEnv world(setup.table, setup.sim);
  world.reset(setup.spec);
  const double target = world.lanes().lane_center(1);
  const double y0 = world.ego().y;
  const double y_min = world.lanes().boundaries().front();
  const double y_max = world.lanes().boundaries().back();
  const int budget = static_cast<int>(std::lround(kSettleBudgetS / setup.sim.dt));
  std::vector<double> ys;
  ys.push_back(y0);
  world.step(env::MetaAction::LLC);
  ys.push_back(world.ego().y);
  while (!world.done()) {
    world.step(env::MetaAction::LK);
    ys.push_back(world.ego().y);
  }
  int settled_at = -1;
  for (int k = static_cast<int>(ys.size()) - 1; k >= 0; --k) {
    if (std::abs(ys[static_cast<std::size_t>(k)] - target) > kSettleBandM) {
      settled_at = k + 1;
      break;
    }
  }
  bool inside = true;
  for (double y : ys) {
    inside = inside && y > y_min && y < y_max;
  }
  v.note(fmt("lateral offset %.2f m from y %.2f to %.2f", std::abs(target - y0), y0, target));
  v.check(settled_at >= 0 && settled_at <= budget,
          fmt("settled within %.1f m after %.2f s <= %.1f s", kSettleBandM,
              settled_at * setup.sim.dt, kSettleBudgetS));
  v.check(inside, "trajectory stays on the road");
}

// 5. Exact kNN agrees with a brute-force oracle and stays inside the time budget.
void criterion_5(Verdict & v)
{
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<rt::KnowledgeRecord> records(1000);
  std::vector<std::vector<double>> keys;
  for (auto & r : records) {
    r.key.resize(rt::kKeyWidth);
    for (double & k : r.key) {
      k = g(rng);
    }
    keys.push_back(r.key);
  }
  const auto t_build = Clock::now();
  const rt::KnnIndex index = rt::KnnIndex::build(records);
  const double build_s = seconds_since(t_build);
  int mismatches = 0;
  double query_s = 0.0;
  for (int q = 0; q < 100; ++q) {
    std::vector<double> key(rt::kKeyWidth);
    for (double & k : key) {
      k = g(rng);
    }
    const auto t0 = Clock::now();
    const auto hits = index.query(key, 3);
    query_s += seconds_since(t0);
    const auto expected = lt::brute_force_knn(keys, key, 3);
    bool same = hits.size() == expected.size();
    for (std::size_t i = 0; same && i < hits.size(); ++i) {
      same = hits[i].index == expected[i].index && hits[i].distance_sq == expected[i].distance_sq;
    }
    mismatches += same ? 0 : 1;
  }
  v.check(mismatches == 0, "100 queries over 1000 records match the oracle (" +
                             std::to_string(mismatches) + " mismatches)");
  v.check(build_s + query_s < kKnnBudgetS,
          fmt("build %.4f s + queries %.4f s < %.0f s", build_s, query_s, kKnnBudgetS));
}

// 6. The prompt is byte-stable and responses parse or fail loudly.
void criterion_6(Verdict & v)
{
  const auto g = lt::golden_prompt_inputs();
  const pl::PromptBundle b = pl::build_prompt(g.state, g.neighbors, env::MetaAction::LLC);
  v.check(b.user == lt::read_fixture("prompt_user_llc.txt"), "user prompt matches golden bytes");
  v.check(b.role == lt::read_fixture("prompt_role.txt"), "role text matches golden bytes");
  pl::PlannerEndpoint e;
  e.model = "test-model";
  v.check(pl::build_request_body(e, b) == nlohmann::json::parse(lt::read_fixture("request_llc.json")),
          "request body matches golden JSON");

  const pl::TrajectoryPrediction p = pl::parse_prediction(lt::read_fixture("response_valid.json"));
  const bool values = p.waypoints[0].x == 132.5 && p.waypoints[0].y == 96.4 &&
                      p.waypoints[1].x == 144.25 && p.waypoints[1].y == 95.1 &&
                      p.waypoints[2].x == 156.0 && p.waypoints[2].y == 94.05 &&
                      p.reason == "Leader is slower; move left while keeping speed.";
  v.check(values, "canned response parses to the expected waypoints and reason");
  for (const char * name : {"response_no_tool.json", "response_missing_field.json",
                            "response_wrong_type.json", "response_nan.json",
                            "response_truncated_args.json", "response_not_json.txt"}) {
    bool raised = false;
    try {
      pl::parse_prediction(lt::read_fixture(name));
    } catch (const pl::UnparseablePrediction & err) {
      raised = err.raw() == lt::read_fixture(name);
    }
    v.check(raised, std::string(name) + " raises UnparseablePrediction carrying the raw body");
  }
}

// 7. Consensus table and the lane-change bound over seeded episodes.
void criterion_7(Verdict & v)
{
  int wrong = 0;
  for (env::MetaAction rl : env::kAllActions) {
    for (env::MetaAction llm : env::kAllActions) {
      const sf::ArbiterDecision d = sf::consensus(rl, llm);
      const env::MetaAction expected = rl == llm ? rl : env::MetaAction::LK;
      wrong += d.executed == expected && d.agreed == (rl == llm) ? 0 : 1;
    }
  }
  v.check(wrong == 0, "3x3 consensus table (" + std::to_string(wrong) + " wrong cells)");

  const env::SimConfig sim = ex::ExperimentConfig{}.sim;
  const rt::KnnIndex index = sc::build_knowledge_index(sc::kSlowLeader, 4, sim, 5);
  sf::MockAdvisor advisor;
  long executed = 0;
  long rl_proposed = 0;
  long llm_proposed = 0;
  bool per_episode = true;
  for (std::uint64_t seed : sc::evaluation_seeds(25)) {
    auto rng = std::make_shared<std::mt19937_64>(seed + 1000);
    ex::ModeStack stack{[rng](const env::ObservationVector &) {
      return env::action_from_index(static_cast<int>((*rng)() % 3));
    }};
    stack.index = &index;
    stack.advisor = &advisor;
    const ex::EpisodeLog log = ex::run_episode(
      {ex::RunMode::RL_IDM_LLM_SAFETY, std::string(sc::kSlowLeader), seed,
       sc::make_scenario(sc::kSlowLeader, seed, sim)},
      stack);
    long e = 0;
    long r = 0;
    long l = 0;
    for (const ex::DecisionRecord & d : log.decisions) {
      e += env::is_lane_change(d.executed) ? 1 : 0;
      r += env::is_lane_change(d.rl_action) ? 1 : 0;
      l += d.arbiter && env::is_lane_change(d.arbiter->llm_action) ? 1 : 0;
    }
    per_episode = per_episode && e <= std::min(r, l);
    executed += e;
    rl_proposed += r;
    llm_proposed += l;
  }
  v.check(per_episode && executed <= std::min(rl_proposed, llm_proposed),
          "executed lane changes " + std::to_string(executed) + " <= min(RL " +
            std::to_string(rl_proposed) + ", advisor " + std::to_string(llm_proposed) +
            "), also per episode");
}

// 8. The safety gate lowers collisions at the cost of decision latency.
void criterion_8(Verdict & v)
{
  const dqn::TrainResult trained = train_reference_agent(nullptr);
  const ex::ExperimentConfig cfg;
  ex::PlannerBackends backends = ex::make_backends("mock", cfg);
  const rt::KnnIndex index =
    sc::build_knowledge_index(cfg.scenario, cfg.knowledge_recordings, cfg.sim, cfg.knowledge_stride);
  ex::ModeStack stack{ex::network_policy(trained.agent->online())};
  stack.index = &index;
  stack.neighbors = cfg.neighbors;
  stack.planner = backends.planner.get();
  stack.advisor = backends.advisor.get();
  const auto seeds = sc::evaluation_seeds(cfg.eval_episodes);
  const auto logs = ex::run_sweep(ex::kAllModes, cfg.scenario, seeds, cfg.sim, stack);
  const ex::MetricsReport report = ex::aggregate_metrics(logs);
  std::istringstream table(ex::format_metrics_table(report));
  for (std::string line; std::getline(table, line);) {
    v.note(line);
  }
  const ex::ModeMetrics * rl = report.find(ex::RunMode::RL_IDM);
  const ex::ModeMetrics * safe = report.find(ex::RunMode::RL_IDM_LLM_SAFETY);
  v.check(rl != nullptr && safe != nullptr && report.modes.size() == 3,
          "report has one column per mode");
  if (rl == nullptr || safe == nullptr) {
    return;
  }
  v.check(safe->collisions_per_run < rl->collisions_per_run,
          fmt("safety collisions/run %.2f < RL+IDM %.2f", safe->collisions_per_run,
              rl->collisions_per_run));
  v.check(safe->inference_s > rl->inference_s,
          fmt("safety inference %.3e s > RL+IDM %.3e s", safe->inference_s, rl->inference_s));
}

// 9. Runs are reproducible byte for byte and replay exactly.
void criterion_9(Verdict & v)
{
  const ex::ExperimentConfig cfg;
  ex::PlannerBackends backends = ex::make_backends("mock", cfg);
  const rt::KnnIndex index = sc::build_knowledge_index(cfg.scenario, 2, cfg.sim, 10);
  const dqn::DqnAgent agent(cfg.agent);
  ex::ModeStack stack{ex::network_policy(agent.online())};
  stack.index = &index;
  stack.planner = backends.planner.get();
  stack.advisor = backends.advisor.get();
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const auto a = ex::run_sweep(ex::kAllModes, cfg.scenario, seeds, cfg.sim, stack);
  const auto b = ex::run_sweep(ex::kAllModes, cfg.scenario, seeds, cfg.sim, stack);
  int differing = 0;
  int replay_failures = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    differing += ex::format_log(a[i]) == ex::format_log(b[i]) ? 0 : 1;
    const auto setup = sc::make_scenario(cfg.scenario, a[i].seed, cfg.sim);
    const ex::ReplayResult r = ex::replay_log(a[i], setup);
    if (!r.identical) {
      ++replay_failures;
      v.note(std::string(ex::to_string(a[i].mode)) + ": " + r.detail);
    }
  }
  v.check(differing == 0, std::to_string(a.size()) + " logs byte-identical across two runs (" +
                            std::to_string(differing) + " differ)");
  v.check(replay_failures == 0, "every log replays bit-for-bit (" +
                                  std::to_string(replay_failures) + " failures)");
}

// 10. The mock planner's waypoints are followed closely on an open road.
void criterion_10(Verdict & v)
{
  env::SimConfig sim;
  pl::MockPlanner planner;
  ex::ModeStack stack{ex::constant_policy(env::MetaAction::LK)};
  stack.planner = &planner;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    const ex::EpisodeLog log = ex::run_episode(
      {ex::RunMode::RL_LLM_TRAJECTORY, std::string(sc::kOpenRoad), seed, sc::open_road(seed, sim)},
      stack);
    const ex::TrajectoryComparison c = ex::compare_trajectories(log);
    for (const auto & e : c.errors) {
      sum += e.error;
    }
    count += c.errors.size();
  }
  const double mean = count > 0 ? sum / static_cast<double>(count) : 1e9;
  v.check(count > 0 && mean < kMockTrackTolM,
          fmt("mean waypoint error %.4f m < %.1f m", mean, kMockTrackTolM) + " over " +
            std::to_string(count) + " waypoints");
}

const std::vector<std::pair<const char *, std::function<void(Verdict &)>>> & criteria()
{
  static const std::vector<std::pair<const char *, std::function<void(Verdict &)>>> list{
    {"Q-network gradient check", criterion_1},
    {"DQN learning and collision reduction", criterion_2},
    {"IDM car following", criterion_3},
    {"lateral PID lane change", criterion_4},
    {"exact kNN retrieval", criterion_5},
    {"prompt and response wire format", criterion_6},
    {"consensus arbitration", criterion_7},
    {"safety gate trade-off", criterion_8},
    {"deterministic logs and replay", criterion_9},
    {"mock trajectory tracking", criterion_10}};
  return list;
}

bool run(int n)
{
  const auto & [name, body] = criteria().at(static_cast<std::size_t>(n - 1));
  std::printf("criterion %d: %s\n", n, name);
  std::fflush(stdout);
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception & e) {
    v.check(false, std::string("exception: ") + e.what());
  }
  std::printf("%s criterion %d (%s) [%.2f s]\n", v.pass() ? "PASS" : "FAIL", n, name,
              seconds_since(t0));
  std::fflush(stdout);
  return v.pass();
}

}  // namespace

int main(int argc, char ** argv)
{
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]...\n", argv[0]);
      return 2;
    }
  }
  if (selected.empty()) {
    for (int n = 1; n <= static_cast<int>(criteria().size()); ++n) {
      selected.push_back(n);
    }
  }
  bool all = true;
  for (int n : selected) {
    if (n < 1 || n > static_cast<int>(criteria().size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    all = run(n) && all;
  }
  return all ? 0 : 1;
}
