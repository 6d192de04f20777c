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

#ifndef LANEPILOT__RENDER_SVG_HPP_
#define LANEPILOT__RENDER_SVG_HPP_

#include "lanepilot/episode_log.hpp"

#include <filesystem>
#include <string>

namespace lanepilot::experiments
{

struct RenderOptions
{
  double px_per_m_x{4.0};
  double px_per_m_y{12.0};
  double margin_m{20.0};
  /// Traffic snapshots are drawn for every n-th decision.
  int traffic_every{5};
};

/// Top-down view: one <line class="lane"> per lane boundary, traffic as <rect class="traffic">,
/// the ego path as a single <polyline class="ego-path">, and one <circle class="waypoint"> per
/// predicted waypoint. Output depends only on the log and the options.
std::string render_svg(const EpisodeLog & log, const RenderOptions & options = {});
void render_svg(const EpisodeLog & log, const std::filesystem::path & path,
                const RenderOptions & options = {});

}  // namespace lanepilot::experiments

#endif  // LANEPILOT__RENDER_SVG_HPP_
