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

#include "lanepilot/dataset_io.hpp"
#include "lanepilot/dqn_agent.hpp"
#include "lanepilot/experiment_config.hpp"
#include "lanepilot/experiments.hpp"
#include "lanepilot/render_svg.hpp"
#include "lanepilot/retrieval.hpp"
#include "lanepilot/scenarios.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace lanepilot;

namespace
{

experiments::ExperimentConfig load_or_default(const std::string & path)
{
  return path.empty() ? experiments::ExperimentConfig{} : experiments::load_config(path);
}

std::optional<retrieval::KnnIndex> load_or_build_index(const std::string & path,
                                                       const experiments::ExperimentConfig & cfg)
{
  if (!path.empty()) {
    return retrieval::KnnIndex::load(fs::path(path));
  }
  if (cfg.scenario == scenarios::kOpenRoad) {
    return std::nullopt;
  }
  return scenarios::build_knowledge_index(cfg.scenario, cfg.knowledge_recordings, cfg.sim,
                                          cfg.knowledge_stride);
}

experiments::RunMode mode_or_throw(const std::string & name)
{
  const auto mode = experiments::parse_mode(name);
  if (!mode) {
    throw CLI::ValidationError("--mode", "unknown mode '" + name + "'");
  }
  return *mode;
}

void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
}

int cmd_train(const std::string & config_path, const std::string & out, int episodes,
              std::optional<std::uint64_t> seed, const std::string & curve_path)
{
  experiments::ExperimentConfig cfg = load_or_default(config_path);
  if (episodes >= 0) {
    cfg.train_episodes = episodes;
  }
  if (seed) {
    cfg.train_seed = *seed;
    cfg.agent.seed = *seed;
  }
  dqn::TrainConfig tc{cfg.train_episodes, cfg.agent};
  const auto start = std::chrono::steady_clock::now();
  dqn::TrainResult result =
    dqn::train(scenarios::training_factory(cfg.scenario, cfg.train_seed, cfg.sim), tc);
  const double elapsed =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.agent->online().save(fs::path(out));

  if (!curve_path.empty()) {
    std::ostringstream csv;
    csv << "episode,return,collided,decisions,epsilon,mean_speed\n";
    for (const dqn::EpisodeStats & s : result.curve) {
      csv << s.episode << ',' << s.episode_return << ',' << (s.collided ? 1 : 0) << ','
          << s.decisions << ',' << s.epsilon << ',' << s.mean_speed << '\n';
    }
    write_text(curve_path, csv.str());
  }
  int collisions = 0;
  for (const dqn::EpisodeStats & s : result.curve) {
    collisions += s.collided ? 1 : 0;
  }
  std::printf("trained %d episodes in %.1f s, %d collisions, %lld gradient steps -> %s\n",
              cfg.train_episodes, elapsed, collisions,
              static_cast<long long>(result.agent->gradient_steps()), out.c_str());
  return 0;
}

experiments::ModeStack make_stack(const experiments::ExperimentConfig & cfg,
                                  const std::string & policy_path,
                                  experiments::PlannerBackends & backends,
                                  const std::optional<retrieval::KnnIndex> & index)
{
  experiments::ModeStack stack;
  stack.policy = policy_path.empty()
                   ? experiments::constant_policy(env::MetaAction::LK)
                   : experiments::network_policy(neural::Mlp::load(fs::path(policy_path)));
  stack.index = index ? &*index : nullptr;
  stack.neighbors = cfg.neighbors;
  stack.planner = backends.planner.get();
  stack.advisor = backends.advisor.get();
  stack.cadence = cfg.arbiter.cadence;
  stack.tracker_y = cfg.sim.control.lateral;
  stack.planner_step_s = cfg.mock.step_s;
  return stack;
}

int cmd_run(const std::string & config_path, const std::string & mode_name,
            const std::string & planner_kind, const std::string & scenario, std::uint64_t seed,
            const std::string & policy_path, const std::string & index_path,
            const std::string & log_path, const std::string & svg_path)
{
  experiments::ExperimentConfig cfg = load_or_default(config_path);
  if (!scenario.empty()) {
    cfg.scenario = scenario;
  }
  const experiments::RunMode mode = mode_or_throw(mode_name);
  experiments::PlannerBackends backends = experiments::make_backends(planner_kind, cfg);
  const auto index = load_or_build_index(index_path, cfg);
  const experiments::ModeStack stack = make_stack(cfg, policy_path, backends, index);

  experiments::EpisodeRequest request{mode, cfg.scenario, seed,
                                      scenarios::make_scenario(cfg.scenario, seed, cfg.sim)};
  const experiments::EpisodeLog log = experiments::run_episode(request, stack);
  if (!log_path.empty()) {
    experiments::write_log(fs::path(log_path), log);
    experiments::write_timing(experiments::timing_path(log_path), log);
  }
  if (!svg_path.empty()) {
    experiments::render_svg(log, fs::path(svg_path));
  }
  std::printf("%s seed %llu: %zu frames, collided=%s, mean speed %.2f km/h\n",
              std::string(experiments::to_string(mode)).c_str(),
              static_cast<unsigned long long>(seed), log.steps.size(),
              log.collided ? "yes" : "no", log.mean_speed() * 3.6);
  return 0;
}

int cmd_eval(const std::string & config_path, const std::vector<std::string> & mode_names,
             const std::string & planner_kind, int episodes, const std::string & policy_path,
             const std::string & index_path, const std::string & csv_path,
             const std::string & log_dir)
{
  experiments::ExperimentConfig cfg = load_or_default(config_path);
  if (episodes >= 0) {
    cfg.eval_episodes = episodes;
  }
  std::vector<experiments::RunMode> modes;
  for (const std::string & name : mode_names) {
    modes.push_back(mode_or_throw(name));
  }
  if (modes.empty()) {
    modes.assign(experiments::kAllModes.begin(), experiments::kAllModes.end());
  }
  experiments::PlannerBackends backends = experiments::make_backends(planner_kind, cfg);
  const auto index = load_or_build_index(index_path, cfg);
  const experiments::ModeStack stack = make_stack(cfg, policy_path, backends, index);
  const auto seeds = scenarios::evaluation_seeds(cfg.eval_episodes);
  const auto logs = experiments::run_sweep(modes, cfg.scenario, seeds, cfg.sim, stack);

  if (!log_dir.empty()) {
    fs::create_directories(log_dir);
    for (const experiments::EpisodeLog & log : logs) {
      const fs::path p = fs::path(log_dir) / (std::string(experiments::to_string(log.mode)) +
                                              "_seed" + std::to_string(log.seed) + ".jsonl");
      experiments::write_log(p, log);
      experiments::write_timing(experiments::timing_path(p), log);
    }
  }
  const experiments::MetricsReport report = experiments::aggregate_metrics(logs);
  std::cout << experiments::format_metrics_table(report);
  std::cout << "scenario " << cfg.scenario << ", seeds 0-" << cfg.eval_episodes - 1
            << ", planner " << planner_kind << '\n';
  if (!csv_path.empty()) {
    write_text(csv_path, experiments::format_metrics_csv(report));
  }
  return 0;
}

int cmd_retrieve_build(const std::string & config_path, const std::string & tracks,
                       const std::string & meta, const std::string & out, int recordings)
{
  experiments::ExperimentConfig cfg = load_or_default(config_path);
  retrieval::KnnIndex index = [&] {
    if (!tracks.empty()) {
      if (meta.empty()) {
        throw CLI::ValidationError("--meta", "required together with --tracks");
      }
      const dataset::TrackTable table =
        dataset::load_tracks(fs::path(tracks), dataset::load_meta(fs::path(meta)));
      return retrieval::KnnIndex::build(
        retrieval::extract_records(table, 0, 10, cfg.knowledge_stride));
    }
    return scenarios::build_knowledge_index(
      cfg.scenario, recordings > 0 ? recordings : cfg.knowledge_recordings, cfg.sim,
      cfg.knowledge_stride);
  }();
  index.save(fs::path(out));
  std::printf("indexed %zu records of width %zu -> %s\n", index.size(), index.dimension(),
              out.c_str());
  return 0;
}

int cmd_retrieve_query(const std::string & index_path, const retrieval::StateFeatures & state,
                       std::size_t k)
{
  const retrieval::KnnIndex index = retrieval::KnnIndex::load(fs::path(index_path));
  const kinematics::LaneGeometry lanes = kinematics::LaneGeometry::uniform(88.0, 100.0, 3);
  const auto key = retrieval::vectorize(state, lanes);
  for (const retrieval::KnnHit & hit : index.query(key, k)) {
    std::printf("#%zu d2=%.6f recording=%lld vehicle=%lld frame=%lld", hit.index,
                hit.distance_sq, static_cast<long long>(hit.record.source.recording_id),
                static_cast<long long>(hit.record.source.vehicle_id),
                static_cast<long long>(hit.record.source.frame));
    for (const retrieval::TrajectorySample & s : hit.record.payload) {
      std::printf(" (dx %.2f, y %.2f, vx %.2f)", s.dx, s.y, s.v_x);
    }
    std::printf("\n");
  }
  return 0;
}

int cmd_render(const std::string & log_path, const std::string & out)
{
  experiments::render_svg(experiments::read_log(fs::path(log_path)), fs::path(out));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

int cmd_replay(const std::string & config_path, const std::string & log_path)
{
  const experiments::ExperimentConfig cfg = load_or_default(config_path);
  const experiments::EpisodeLog log = experiments::read_log(fs::path(log_path));
  env::SimConfig sim = cfg.sim;
  sim.dt = log.dt;
  sim.decision_period = log.decision_period;
  const auto setup = scenarios::make_scenario(log.scenario, log.seed, sim);
  const experiments::ReplayResult r = experiments::replay_log(log, setup);
  std::printf("%s\n", r.identical ? "replay identical" : ("replay differs: " + r.detail).c_str());
  return r.identical ? 0 : 1;
}

int cmd_synth(const std::string & config_path, const std::string & scenario, std::uint64_t seed,
              const std::string & tracks, const std::string & meta)
{
  experiments::ExperimentConfig cfg = load_or_default(config_path);
  const auto setup =
    scenarios::make_scenario(scenario.empty() ? cfg.scenario : scenario, seed, cfg.sim);
  dataset::write_tracks(fs::path(tracks), *setup.table);
  dataset::save_meta(fs::path(meta), setup.table->meta());
  std::printf("wrote %zu rows -> %s\n", setup.table->rows().size(), tracks.c_str());
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"lanepilot: highway meta-action agent with planner and safety layers"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);

  // train
  auto * train = app.add_subcommand("train", "train the DQN policy");
  std::string train_out = "policy.mlp";
  std::string curve;
  int train_episodes = -1;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--out", train_out, "checkpoint path");
  train->add_option("--episodes", train_episodes, "override the episode count");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--curve", curve, "learning curve CSV");

  // run
  auto * run = app.add_subcommand("run", "run one episode");
  std::string mode = "RL_IDM";
  std::string planner_kind = "mock";
  std::string scenario;
  std::uint64_t seed = 0;
  std::string policy;
  std::string index;
  std::string log;
  std::string svg;
  run->add_option("--mode", mode, "RL_IDM | RL_LLM_TRAJECTORY | RL_IDM_LLM_SAFETY");
  run->add_option("--planner", planner_kind, "live | mock")
    ->check(CLI::IsMember({"live", "mock"}));
  run->add_option("--scenario", scenario, "scenario name");
  run->add_option("--seed", seed, "scenario seed");
  run->add_option("--policy", policy, "DQN checkpoint (default: always lane keep)");
  run->add_option("--index", index, "knowledge index (default: built in memory)");
  run->add_option("--log", log, "JSONL episode log");
  run->add_option("--svg", svg, "SVG render of the episode");

  // eval
  auto * eval = app.add_subcommand("eval", "evaluate run modes over the scenario matrix");
  std::vector<std::string> modes;
  int eval_episodes = -1;
  std::string csv;
  std::string log_dir;
  eval->add_option("--modes", modes, "modes to evaluate (default: all)")->delimiter(',');
  eval->add_option("--planner", planner_kind, "live | mock")
    ->check(CLI::IsMember({"live", "mock"}));
  eval->add_option("--episodes", eval_episodes, "episodes per mode (seeds 0..n-1)");
  eval->add_option("--policy", policy, "DQN checkpoint");
  eval->add_option("--index", index, "knowledge index");
  eval->add_option("--csv", csv, "metrics CSV");
  eval->add_option("--log-dir", log_dir, "directory for per-episode logs");

  // retrieve-build
  auto * rbuild = app.add_subcommand("retrieve-build", "build a knowledge index");
  std::string tracks;
  std::string meta;
  std::string index_out = "knowledge.idx";
  int recordings = 0;
  rbuild->add_option("--tracks", tracks, "track CSV (default: synthetic recordings)");
  rbuild->add_option("--meta", meta, "recording meta JSON for --tracks");
  rbuild->add_option("--recordings", recordings, "synthetic recordings to index");
  rbuild->add_option("--out", index_out, "index path");

  // retrieve-query
  auto * rquery = app.add_subcommand("retrieve-query", "query a knowledge index");
  retrieval::StateFeatures state;
  state.y = 94.0;
  state.v_x = 25.0;
  state.lane_id = 2;
  std::size_t k = 3;
  rquery->add_option("--index", index, "index path")->required();
  rquery->add_option("--y", state.y, "lateral position, m");
  rquery->add_option("--vx", state.v_x, "longitudinal speed, m/s");
  rquery->add_option("--vy", state.v_y, "lateral speed, m/s");
  rquery->add_option("--ax", state.a_x, "longitudinal acceleration");
  rquery->add_option("--ay", state.a_y, "lateral acceleration");
  rquery->add_option("--front", state.front_sight_distance, "front sight distance, m");
  rquery->add_option("--back", state.back_sight_distance, "back sight distance, m");
  rquery->add_option("--preceding", state.preceding_x_velocity, "leader speed, m/s");
  rquery->add_option("--lane", state.lane_id, "lane id on the default 3-lane road");
  rquery->add_option("-k", k, "neighbors");

  // render
  auto * render = app.add_subcommand("render", "render an episode log to SVG");
  std::string render_out = "episode.svg";
  render->add_option("--log", log, "JSONL episode log")->required();
  render->add_option("--out", render_out, "SVG path");

  // replay
  auto * replay = app.add_subcommand("replay", "re-simulate a log and compare states");
  replay->add_option("--log", log, "JSONL episode log")->required();

  // synth
  auto * synth = app.add_subcommand("synth", "write a synthetic recording");
  std::string synth_tracks = "tracks.csv";
  std::string synth_meta = "meta.json";
  synth->add_option("--scenario", scenario, "scenario name");
  synth->add_option("--seed", seed, "scenario seed");
  synth->add_option("--tracks", synth_tracks, "track CSV path");
  synth->add_option("--meta", synth_meta, "meta JSON path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) {
      return cmd_train(config, train_out, train_episodes, train_seed, curve);
    }
    if (*run) {
      return cmd_run(config, mode, planner_kind, scenario, seed, policy, index, log, svg);
    }
    if (*eval) {
      return cmd_eval(config, modes, planner_kind, eval_episodes, policy, index, csv, log_dir);
    }
    if (*rbuild) {
      return cmd_retrieve_build(config, tracks, meta, index_out, recordings);
    }
    if (*rquery) {
      return cmd_retrieve_query(index, state, k);
    }
    if (*render) {
      return cmd_render(log, render_out);
    }
    if (*replay) {
      return cmd_replay(config, log);
    }
    if (*synth) {
      return cmd_synth(config, scenario, seed, synth_tracks, synth_meta);
    }
  } catch (const CLI::Error & e) {
    return app.exit(e);
  } catch (const std::exception & e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
