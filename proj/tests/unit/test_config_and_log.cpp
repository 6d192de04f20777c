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

#include "lanepilot/episode_log.hpp"
#include "lanepilot/experiment_config.hpp"
#include "lanepilot/experiments.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ex = lanepilot::experiments;
namespace env = lanepilot::env;
using lanepilot::testing::cruiser;
using lanepilot::testing::read_file;
using lanepilot::testing::scratch_dir;
using lanepilot::testing::scripted_setup;

namespace
{

ex::EpisodeLog sample_log()
{
  const auto setup = scripted_setup({cruiser(1, 2, 45.0, 15.0), cruiser(2, 1, 10.0, 27.0)},
                                    {0, 2, 0.0, 25.0}, 150);
  lanepilot::safety::MockAdvisor advisor;
  ex::ModeStack stack{ex::scripted_policy({env::MetaAction::LLC, env::MetaAction::RLC})};
  stack.advisor = &advisor;
  ex::EpisodeLog log = ex::run_episode({ex::RunMode::RL_IDM_LLM_SAFETY, "scripted", 9, setup}, stack);
  for (std::size_t i = 0; i < log.decisions.size(); ++i) {
    log.decisions[i].inference_s = 1e-5 * static_cast<double>(i + 1);
  }
  return log;
}

}  // namespace

TEST(Config, DefaultsRoundTrip)
{
  const ex::ExperimentConfig c;
  const nlohmann::json j = ex::config_to_json(c);
  EXPECT_EQ(ex::config_to_json(ex::config_from_json(j)), j);
  EXPECT_EQ(ex::config_to_json(ex::config_from_json(nlohmann::json::object())), j);
}

TEST(Config, FileRoundTripWithOverrides)
{
  const nlohmann::json j = {{"sim", {{"episode_frames", 200}, {"reward", {{"collision", 5.0}}}}},
                            {"agent", {{"hidden_layers", {32, 16}}, {"epsilon", {{"end", 0.1}}}}},
                            {"planner", {{"retries", 4}, {"api_key_env", "MY_KEY"}}},
                            {"arbiter", {{"cadence", "every_decision"}}}};
  const ex::ExperimentConfig c = ex::config_from_json(j);
  EXPECT_EQ(c.sim.episode_frames, 200);
  EXPECT_DOUBLE_EQ(c.sim.reward.collision, 5.0);
  EXPECT_EQ(c.agent.hidden_layers, (std::vector<int>{32, 16}));
  EXPECT_DOUBLE_EQ(c.agent.epsilon.end, 0.1);
  EXPECT_EQ(c.endpoint.retries, 4);
  EXPECT_EQ(c.arbiter.cadence, lanepilot::safety::QueryCadence::EveryDecision);

  const auto dir = scratch_dir("config");
  ex::save_config(dir / "c.json", c);
  EXPECT_EQ(ex::config_to_json(ex::load_config(dir / "c.json")), ex::config_to_json(c));
}

TEST(Config, TokenNeverWritten)
{
  ex::ExperimentConfig c;
  c.endpoint.api_key_env = "LANEPILOT_CONFIG_TEST_TOKEN";
  ::setenv("LANEPILOT_CONFIG_TEST_TOKEN", "tok-should-not-appear", 1);
  const auto dir = scratch_dir("config_token");
  ex::save_config(dir / "c.json", c);
  ::unsetenv("LANEPILOT_CONFIG_TEST_TOKEN");
  const std::string text = read_file(dir / "c.json");
  EXPECT_EQ(text.find("tok-should-not-appear"), std::string::npos);
  EXPECT_NE(text.find("LANEPILOT_CONFIG_TEST_TOKEN"), std::string::npos);
}

TEST(Config, RejectsBadInput)
{
  EXPECT_THROW(ex::config_from_json({{"simulation", {}}}), ex::ConfigError);
  EXPECT_THROW(ex::config_from_json({{"sim", {{"dtt", 0.1}}}}), ex::ConfigError);
  EXPECT_THROW(ex::config_from_json({{"sim", {{"dt", "fast"}}}}), ex::ConfigError);
  EXPECT_THROW(ex::config_from_json({{"arbiter", {{"cadence", "sometimes"}}}}), ex::ConfigError);
  EXPECT_THROW(ex::config_from_json({{"train", {{"episodes", -1}}}}), ex::ConfigError);
  EXPECT_THROW(ex::config_from_json(nlohmann::json::array()), ex::ConfigError);
  EXPECT_THROW(ex::load_config("/nonexistent/lanepilot.json"), ex::ConfigError);
}

TEST(RunModeNames, ParseBothSpellings)
{
  for (ex::RunMode m : ex::kAllModes) {
    EXPECT_EQ(ex::parse_mode(ex::to_string(m)), m);
    EXPECT_EQ(ex::parse_mode(ex::display_name(m)), m);
  }
  EXPECT_EQ(ex::display_name(ex::RunMode::RL_IDM), "RL+IDM");
  EXPECT_FALSE(ex::parse_mode("rl_idm").has_value());
}

TEST(EpisodeLogIo, RoundTripIsExact)
{
  const ex::EpisodeLog log = sample_log();
  ASSERT_FALSE(log.decisions.empty());
  ASSERT_TRUE(log.decisions[0].query.has_value());
  const std::string text = ex::format_log(log);
  std::istringstream in(text);
  const ex::EpisodeLog back = ex::read_log(in);
  EXPECT_EQ(back, log);
  EXPECT_EQ(ex::format_log(back), text);
  EXPECT_EQ(text.find("inference_s"), std::string::npos);
}

TEST(EpisodeLogIo, TimingSidecar)
{
  const ex::EpisodeLog log = sample_log();
  const auto dir = scratch_dir("timing");
  const auto path = dir / "run.jsonl";
  ex::write_log(path, log);
  ex::write_timing(ex::timing_path(path), log);
  EXPECT_EQ(ex::timing_path(path).filename(), "run.jsonl.timing.jsonl");
  ex::EpisodeLog back = ex::read_log(path);
  for (const auto & d : back.decisions) {
    EXPECT_EQ(d.inference_s, 0.0);
  }
  ex::read_timing(ex::timing_path(path), back);
  for (std::size_t i = 0; i < log.decisions.size(); ++i) {
    EXPECT_EQ(back.decisions[i].inference_s, log.decisions[i].inference_s);
  }
  back.decisions[0].frame += 1;
  EXPECT_THROW(ex::read_timing(ex::timing_path(path), back), ex::LogError);
}

TEST(EpisodeLogIo, MalformedInput)
{
  std::istringstream empty("");
  EXPECT_THROW(ex::read_log(empty), ex::LogError);
  std::istringstream garbage("{not json\n");
  EXPECT_ANY_THROW(ex::read_log(garbage));
  const std::string text = ex::format_log(sample_log());
  std::istringstream truncated(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
  EXPECT_THROW(ex::read_log(truncated), ex::LogError);
  EXPECT_THROW(ex::read_log(std::filesystem::path("/nonexistent/log.jsonl")), ex::LogError);
}

TEST(EpisodeLogIo, EgoLookupAndSummary)
{
  const ex::EpisodeLog log = sample_log();
  EXPECT_EQ(log.ego_at(log.start.start_frame), log.initial);
  EXPECT_EQ(log.ego_at(log.steps[3].frame), log.steps[3].ego);
  EXPECT_FALSE(log.ego_at(log.last_frame() + 1).has_value());
  EXPECT_FALSE(log.ego_at(-5).has_value());
  double sum = 0.0;
  for (const auto & s : log.steps) {
    sum += s.ego.v_x;
  }
  EXPECT_NEAR(log.mean_speed(), sum / static_cast<double>(log.steps.size()), 1e-12);
}
