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

#include "lanepilot/render_svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lanepilot::experiments
{

namespace
{

std::string num(double v)
{
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

}  // namespace

std::string render_svg(const EpisodeLog & log, const RenderOptions & o)
{
  if (log.lane_boundaries.size() < 2) {
    throw LogError("log carries no lane geometry");
  }
  if (!(o.px_per_m_x > 0.0) || !(o.px_per_m_y > 0.0) || o.margin_m < 0.0 || o.traffic_every < 1) {
    throw std::invalid_argument("render scales must be positive");
  }

  double x_min = log.initial.x;
  double x_max = log.initial.x;
  for (const StepRecord & s : log.steps) {
    x_min = std::min(x_min, s.ego.x);
    x_max = std::max(x_max, s.ego.x);
  }
  for (const DecisionRecord & d : log.decisions) {
    if (d.plan) {
      for (const controllers::Waypoint & w : d.plan->prediction.waypoints) {
        x_max = std::max(x_max, w.x);
      }
    }
  }
  x_min -= o.margin_m;
  x_max += o.margin_m;
  const double y_min = log.lane_boundaries.front() - 2.0;
  const double y_max = log.lane_boundaries.back() + 2.0;
  auto px = [&](double x) { return (x - x_min) * o.px_per_m_x; };
  auto py = [&](double y) { return (y - y_min) * o.px_per_m_y; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(px(x_max)) << "\" height=\""
      << num(py(y_max)) << "\">\n";
  out << "<g id=\"lanes\" stroke=\"#444\" stroke-width=\"1\">\n";
  for (std::size_t i = 0; i < log.lane_boundaries.size(); ++i) {
    const bool edge = i == 0 || i + 1 == log.lane_boundaries.size();
    const double y = py(log.lane_boundaries[i]);
    out << "<line class=\"lane\" x1=\"0.00\" y1=\"" << num(y) << "\" x2=\"" << num(px(x_max))
        << "\" y2=\"" << num(y) << "\"" << (edge ? "" : " stroke-dasharray=\"12 8\"") << "/>\n";
  }
  out << "</g>\n";

  out << "<g id=\"traffic\" fill=\"#c0392b\" fill-opacity=\"0.25\">\n";
  for (std::size_t i = 0; i < log.decisions.size(); i += static_cast<std::size_t>(o.traffic_every)) {
    for (const TrafficBox & b : log.decisions[i].traffic) {
      if (b.x + b.length / 2.0 < x_min || b.x - b.length / 2.0 > x_max) {
        continue;
      }
      out << "<rect class=\"traffic\" x=\"" << num(px(b.x - b.length / 2.0)) << "\" y=\""
          << num(py(b.y - b.width / 2.0)) << "\" width=\"" << num(b.length * o.px_per_m_x)
          << "\" height=\"" << num(b.width * o.px_per_m_y) << "\"/>\n";
    }
  }
  out << "</g>\n";

  out << "<polyline class=\"ego-path\" fill=\"none\" stroke=\"#b00\" stroke-width=\"2\" points=\"";
  out << num(px(log.initial.x)) << ',' << num(py(log.initial.y));
  for (const StepRecord & s : log.steps) {
    out << ' ' << num(px(s.ego.x)) << ',' << num(py(s.ego.y));
  }
  out << "\"/>\n";

  out << "<g id=\"waypoints\" fill=\"#1e8449\">\n";
  for (const DecisionRecord & d : log.decisions) {
    if (!d.plan) {
      continue;
    }
    for (const controllers::Waypoint & w : d.plan->prediction.waypoints) {
      out << "<circle class=\"waypoint\" cx=\"" << num(px(w.x)) << "\" cy=\"" << num(py(w.y))
          << "\" r=\"3\"/>\n";
    }
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

void render_svg(const EpisodeLog & log, const std::filesystem::path & path,
                const RenderOptions & options)
{
  const std::string svg = render_svg(log, options);
  std::ofstream out(path);
  if (!out) {
    throw LogError("cannot write " + path.string());
  }
  out << svg;
}

}  // namespace lanepilot::experiments
