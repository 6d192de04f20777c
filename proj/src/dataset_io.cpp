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

#include "lanepilot/controllers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace lanepilot::dataset
{
namespace
{

constexpr std::size_t kColumnCount = std::size(kTrackColumns);

std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv_line(const std::string & line)
{
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

std::string location(const std::string & source, std::size_t line, const std::string & column)
{
  return source + ": line " + std::to_string(line) + ", column '" + column + "'";
}

double parse_double(const std::string & cell, const std::string & where)
{
  double value = 0.0;
  const char * begin = cell.data();
  const char * end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || cell.empty()) {
    throw DatasetError(where + ": non-numeric value '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw DatasetError(where + ": non-finite value '" + cell + "'");
  }
  return value;
}

std::int64_t parse_integer(const std::string & cell, const std::string & where)
{
  // highD writes some integer columns as floats ("3.0"); accept exact integers only
  const double value = parse_double(cell, where);
  if (value != std::floor(value) || std::abs(value) > 9.0e15) {
    throw DatasetError(where + ": expected an integer, got '" + cell + "'");
  }
  return static_cast<std::int64_t>(value);
}

std::string format_double(double v)
{
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string row_label(const TrackRow & row)
{
  return "vehicle " + std::to_string(row.vehicle_id) + " at frame " + std::to_string(row.frame);
}

void validate_row(const TrackRow & row, int lane_count)
{
  const double values[] = {row.x, row.y, row.width, row.height, row.x_velocity, row.y_velocity,
                           row.x_acceleration, row.y_acceleration, row.front_sight_distance,
                           row.back_sight_distance, row.preceding_x_velocity};
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DatasetError(row_label(row) + ": non-finite field");
    }
  }
  if (row.frame < 0) {
    throw DatasetError(row_label(row) + ": negative frame");
  }
  if (!(row.width > 0.0) || !(row.height > 0.0)) {
    throw DatasetError(row_label(row) + ": width and height must be positive");
  }
  if (row.lane_id < 1 || row.lane_id > lane_count) {
    throw DatasetError(
      row_label(row) + ": laneId " + std::to_string(row.lane_id) + " has no declared lane center");
  }
  if (row.front_sight_distance < 0.0 || row.back_sight_distance < 0.0) {
    throw DatasetError(row_label(row) + ": sight distances must be non-negative");
  }
}

/// Same-lane sight distances and leader speed for every row of one frame.
void annotate_sight(std::vector<TrackRow *> & frame_rows)
{
  std::sort(frame_rows.begin(), frame_rows.end(), [](const TrackRow * a, const TrackRow * b) {
    if (a->lane_id != b->lane_id) {
      return a->lane_id < b->lane_id;
    }
    if (a->x != b->x) {
      return a->x < b->x;
    }
    return a->vehicle_id < b->vehicle_id;
  });
  for (std::size_t i = 0; i < frame_rows.size(); ++i) {
    TrackRow & row = *frame_rows[i];
    row.front_sight_distance = kNoVehicleInSight;
    row.back_sight_distance = kNoVehicleInSight;
    row.preceding_x_velocity = 0.0;
    if (i + 1 < frame_rows.size() && frame_rows[i + 1]->lane_id == row.lane_id) {
      const TrackRow & lead = *frame_rows[i + 1];
      const double gap = kinematics::longitudinal_gap(row.body(), lead.body());
      row.front_sight_distance = std::clamp(gap, 0.0, kNoVehicleInSight);
      row.preceding_x_velocity = lead.x_velocity;
    }
    if (i > 0 && frame_rows[i - 1]->lane_id == row.lane_id) {
      const TrackRow & follower = *frame_rows[i - 1];
      const double gap = kinematics::longitudinal_gap(follower.body(), row.body());
      row.back_sight_distance = std::clamp(gap, 0.0, kNoVehicleInSight);
    }
  }
}

}  // namespace

void to_json(nlohmann::json & j, const RecordingMeta & meta)
{
  j = nlohmann::json{
    {"frameRate", meta.frame_rate},
    {"laneBoundaries", meta.lane_boundaries},
    {"laneCenters", meta.lane_centers}};
  if (meta.frame_count) {
    j["frameCount"] = *meta.frame_count;
  }
}

void from_json(const nlohmann::json & j, RecordingMeta & meta)
{
  meta.frame_rate = j.value("frameRate", 25.0);
  meta.lane_boundaries = j.at("laneBoundaries").get<std::vector<double>>();
  meta.lane_centers = j.at("laneCenters").get<std::vector<double>>();
  if (j.contains("frameCount")) {
    meta.frame_count = j.at("frameCount").get<std::int64_t>();
  } else {
    meta.frame_count.reset();
  }
}

RecordingMeta load_meta(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("cannot open metadata file " + path.string());
  }
  try {
    return nlohmann::json::parse(in).get<RecordingMeta>();
  } catch (const nlohmann::json::exception & e) {
    throw DatasetError(path.string() + ": invalid metadata: " + e.what());
  }
}

void save_meta(const std::filesystem::path & path, const RecordingMeta & meta)
{
  std::ofstream out(path);
  if (!out) {
    throw DatasetError("cannot write metadata file " + path.string());
  }
  out << nlohmann::json(meta).dump(2) << '\n';
}

TrackTable TrackTable::from_rows(std::vector<TrackRow> rows, RecordingMeta meta)
{
  if (!(meta.frame_rate > 0.0) || !std::isfinite(meta.frame_rate)) {
    throw DatasetError("frame rate must be positive");
  }
  TrackTable table;
  try {
    table.lanes_ = meta.lanes();
  } catch (const kinematics::LaneError & e) {
    throw DatasetError(std::string("invalid lane metadata: ") + e.what());
  }
  const int lane_count = table.lanes_.lane_count();

  std::int64_t max_frame = -1;
  for (const TrackRow & row : rows) {
    validate_row(row, lane_count);
    max_frame = std::max(max_frame, row.frame);
  }
  if (meta.frame_count) {
    if (*meta.frame_count < 1) {
      throw DatasetError("declared frame count must be at least 1");
    }
    if (max_frame >= *meta.frame_count) {
      throw DatasetError(
        "row at frame " + std::to_string(max_frame) + " exceeds declared frame count " +
        std::to_string(*meta.frame_count));
    }
    table.frame_count_ = *meta.frame_count;
  } else {
    if (rows.empty()) {
      throw DatasetError("empty table needs a declared frame count");
    }
    table.frame_count_ = max_frame + 1;
  }

  // per-vehicle monotonicity, checked in input order
  std::unordered_map<std::int64_t, std::int64_t> last_frame;
  for (const TrackRow & row : rows) {
    auto it = last_frame.find(row.vehicle_id);
    if (it != last_frame.end()) {
      if (row.frame <= it->second) {
        throw DatasetError(
          row_label(row) + ": frames not strictly increasing (previous frame " +
          std::to_string(it->second) + ")");
      }
      if (row.frame != it->second + 1) {
        throw DatasetError(
          row_label(row) + ": frame gap after frame " + std::to_string(it->second));
      }
      it->second = row.frame;
    } else {
      last_frame.emplace(row.vehicle_id, row.frame);
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const TrackRow & a, const TrackRow & b) {
    return a.frame != b.frame ? a.frame < b.frame : a.vehicle_id < b.vehicle_id;
  });
  table.frame_offsets_.assign(static_cast<std::size_t>(table.frame_count_) + 1, 0);
  std::size_t cursor = 0;
  for (std::int64_t f = 0; f < table.frame_count_; ++f) {
    table.frame_offsets_[static_cast<std::size_t>(f)] = cursor;
    while (cursor < rows.size() && rows[cursor].frame == f) {
      ++cursor;
    }
  }
  table.frame_offsets_.back() = cursor;
  table.rows_ = std::move(rows);
  table.meta_ = std::move(meta);
  return table;
}

std::span<const TrackRow> TrackTable::at_frame(std::int64_t frame) const
{
  if (frame < 0 || frame >= frame_count_) {
    return {};
  }
  const auto f = static_cast<std::size_t>(frame);
  return std::span<const TrackRow>(rows_).subspan(
    frame_offsets_[f], frame_offsets_[f + 1] - frame_offsets_[f]);
}

std::vector<std::int64_t> TrackTable::vehicle_ids() const
{
  std::vector<std::int64_t> ids;
  ids.reserve(rows_.size());
  for (const TrackRow & row : rows_) {
    ids.push_back(row.vehicle_id);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

TrackTable parse_tracks(const std::string & text, const RecordingMeta & meta,
                        const std::string & source_name)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw DatasetError(source_name + ": missing header row");
  }
  const std::vector<std::string> header = split_csv_line(line);
  std::array<std::size_t, kColumnCount> column_index{};
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto it = std::find(header.begin(), header.end(), kTrackColumns[c]);
    if (it == header.end()) {
      throw DatasetError(
        source_name + ": header is missing column '" + std::string(kTrackColumns[c]) + "'");
    }
    column_index[c] = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<TrackRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size()) {
      throw DatasetError(
        source_name + ": line " + std::to_string(line_no) + ": expected " +
        std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
    }
    auto cell = [&](std::size_t c) -> const std::string & { return cells[column_index[c]]; };
    auto where = [&](std::size_t c) { return location(source_name, line_no, kTrackColumns[c]); };
    TrackRow row;
    row.frame = parse_integer(cell(0), where(0));
    row.vehicle_id = parse_integer(cell(1), where(1));
    row.x = parse_double(cell(2), where(2));
    row.y = parse_double(cell(3), where(3));
    row.width = parse_double(cell(4), where(4));
    row.height = parse_double(cell(5), where(5));
    row.x_velocity = parse_double(cell(6), where(6));
    row.y_velocity = parse_double(cell(7), where(7));
    row.x_acceleration = parse_double(cell(8), where(8));
    row.y_acceleration = parse_double(cell(9), where(9));
    row.front_sight_distance = parse_double(cell(10), where(10));
    row.back_sight_distance = parse_double(cell(11), where(11));
    row.preceding_x_velocity = parse_double(cell(12), where(12));
    row.lane_id = static_cast<int>(parse_integer(cell(13), where(13)));
    rows.push_back(row);
  }
  try {
    return TrackTable::from_rows(std::move(rows), meta);
  } catch (const DatasetError & e) {
    throw DatasetError(source_name + ": " + e.what());
  }
}

TrackTable load_tracks(const std::filesystem::path & path, const RecordingMeta & meta)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetError("cannot open tracks file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_tracks(buffer.str(), meta, path.string());
}

std::string format_tracks(const TrackTable & table)
{
  std::string out;
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    out += kTrackColumns[c];
    out += c + 1 < kColumnCount ? ',' : '\n';
  }
  // vehicle-major order, the layout of highD tracks files
  std::vector<const TrackRow *> ordered;
  ordered.reserve(table.rows().size());
  for (const TrackRow & row : table.rows()) {
    ordered.push_back(&row);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const TrackRow * a, const TrackRow * b) {
    return a->vehicle_id != b->vehicle_id ? a->vehicle_id < b->vehicle_id : a->frame < b->frame;
  });
  for (const TrackRow * r : ordered) {
    out += std::to_string(r->frame) + ',' + std::to_string(r->vehicle_id) + ',' +
           format_double(r->x) + ',' + format_double(r->y) + ',' + format_double(r->width) + ',' +
           format_double(r->height) + ',' + format_double(r->x_velocity) + ',' +
           format_double(r->y_velocity) + ',' + format_double(r->x_acceleration) + ',' +
           format_double(r->y_acceleration) + ',' + format_double(r->front_sight_distance) + ',' +
           format_double(r->back_sight_distance) + ',' + format_double(r->preceding_x_velocity) +
           ',' + std::to_string(r->lane_id) + '\n';
  }
  return out;
}

void write_tracks(const std::filesystem::path & path, const TrackTable & table)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DatasetError("cannot write tracks file " + path.string());
  }
  out << format_tracks(table);
}

std::vector<TrackRow> frame_snapshot(const TrackTable & table, std::int64_t frame)
{
  if (frame < 0 || frame > table.last_frame()) {
    throw DatasetError(
      "frame " + std::to_string(frame) + " outside recording [0, " +
      std::to_string(table.last_frame()) + "]");
  }
  const auto rows = table.at_frame(frame);
  return {rows.begin(), rows.end()};
}

RecordingMeta scenario_meta(const ScenarioSpec & spec)
{
  RecordingMeta meta;
  meta.frame_rate = spec.frame_rate;
  for (int k = 0; k <= spec.lane_count; ++k) {
    meta.lane_boundaries.push_back(spec.road_left_y + k * spec.lane_width);
  }
  for (int k = 0; k < spec.lane_count; ++k) {
    meta.lane_centers.push_back(spec.road_left_y + (k + 0.5) * spec.lane_width);
  }
  meta.frame_count = spec.duration;
  return meta;
}

TrackTable synth_scenario(const ScenarioSpec & spec)
{
  if (spec.lane_count < 2) {
    throw DatasetError("scenario needs at least two lanes");
  }
  if (spec.duration < 1) {
    throw DatasetError("scenario duration must be at least one frame");
  }
  if (!(spec.lane_width > 0.0) || !(spec.frame_rate > 0.0)) {
    throw DatasetError("lane width and frame rate must be positive");
  }
  const RecordingMeta meta = scenario_meta(spec);
  const kinematics::LaneGeometry lanes = meta.lanes();
  const double dt = meta.dt();

  struct Agent
  {
    VehicleBehavior behavior;
    bool reactive{false};
    double desired_speed{0.0};
    double x{0.0};
    double v{0.0};
  };
  std::vector<Agent> agents;
  std::int64_t next_id = 1;
  for (const VehicleBehavior & b : spec.vehicles) {
    if (!lanes.has_lane(b.lane_id)) {
      throw DatasetError("vehicle " + std::to_string(b.id) + " placed on unknown lane");
    }
    if (!(b.length > 0.0) || !(b.width > 0.0) || b.v0 < 0.0) {
      throw DatasetError("vehicle " + std::to_string(b.id) + " has invalid dimensions or speed");
    }
    agents.push_back({b, false, b.v0, b.x0, b.v0});
    next_id = std::max(next_id, b.id + 1);
  }

  auto body_of = [&](const VehicleBehavior & b, double x) {
    return kinematics::BodyRect{x, lanes.lane_center(b.lane_id), b.length, b.width};
  };
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (agents[i].behavior.id == agents[j].behavior.id) {
        throw DatasetError("duplicate vehicle id " + std::to_string(agents[i].behavior.id));
      }
      if (kinematics::rect_overlap(body_of(agents[i].behavior, agents[i].x),
                                   body_of(agents[j].behavior, agents[j].x)))
      {
        throw DatasetError(
          "vehicles " + std::to_string(agents[i].behavior.id) + " and " +
          std::to_string(agents[j].behavior.id) + " overlap at frame 0");
      }
    }
  }

  // seeded traffic: IDM drivers with individual desired speeds
  const RandomTraffic & rt = spec.random_traffic;
  if (rt.count > 0) {
    std::mt19937_64 rng(spec.seed);
    std::vector<int> lane_pool = rt.lane_ids;
    if (lane_pool.empty()) {
      for (int l = 1; l <= spec.lane_count; ++l) {
        lane_pool.push_back(l);
      }
    }
    for (int l : lane_pool) {
      if (!lanes.has_lane(l)) {
        throw DatasetError("random traffic lane " + std::to_string(l) + " does not exist");
      }
    }
    std::uniform_int_distribution<std::size_t> lane_dist(0, lane_pool.size() - 1);
    std::uniform_real_distribution<double> x_dist(rt.x_min, rt.x_max);
    std::uniform_real_distribution<double> v_dist(rt.v_min, rt.v_max);
    constexpr double kPlacementMargin = 6.0;
    for (int n = 0; n < rt.count; ++n) {
      bool placed = false;
      for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        VehicleBehavior b;
        b.id = next_id;
        b.lane_id = lane_pool[lane_dist(rng)];
        b.x0 = x_dist(rng);
        b.v0 = v_dist(rng);
        b.length = rt.length;
        b.width = rt.width;
        kinematics::BodyRect padded = body_of(b, b.x0);
        padded.length += 2.0 * kPlacementMargin;
        const bool clear = std::none_of(agents.begin(), agents.end(), [&](const Agent & a) {
          return kinematics::rect_overlap(padded, body_of(a.behavior, a.x));
        });
        if (clear) {
          agents.push_back({b, true, b.v0, b.x0, b.v0});
          ++next_id;
          placed = true;
        }
      }
      if (!placed) {
        throw DatasetError("could not place random vehicle " + std::to_string(n) + " without overlap");
      }
    }
  }

  auto scripted_accel = [](const VehicleBehavior & b, std::int64_t frame) {
    double a = 0.0;
    for (const SpeedSegment & seg : b.profile) {
      if (seg.start_frame <= frame) {
        a = seg.acceleration;
      }
    }
    return a;
  };

  std::vector<TrackRow> rows;
  rows.reserve(agents.size() * static_cast<std::size_t>(spec.duration));
  std::vector<double> accel(agents.size(), 0.0);
  for (std::int64_t frame = 0; frame < spec.duration; ++frame) {
    // accelerations for the interval [frame, frame + 1)
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const Agent & a = agents[i];
      double acc = 0.0;
      if (a.reactive) {
        controllers::IdmParams idm;
        idm.desired_velocity = std::max(a.desired_speed, 1.0);
        double gap = std::numeric_limits<double>::infinity();
        double v_lead = a.v;
        for (const Agent & other : agents) {
          if (&other == &a || other.behavior.lane_id != a.behavior.lane_id || other.x <= a.x) {
            continue;
          }
          const double g = kinematics::longitudinal_gap(body_of(a.behavior, a.x),
                                                        body_of(other.behavior, other.x));
          if (g < gap) {
            gap = g;
            v_lead = other.v;
          }
        }
        acc = controllers::idm_accel(idm, a.v, v_lead, gap);
      } else {
        acc = scripted_accel(a.behavior, frame);
      }
      // never reverse: cap deceleration so the speed stops at zero
      if (a.v + acc * dt < 0.0) {
        acc = -a.v / dt;
      }
      accel[i] = acc;
    }

    const std::size_t frame_begin = rows.size();
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const Agent & a = agents[i];
      TrackRow row;
      row.frame = frame;
      row.vehicle_id = a.behavior.id;
      row.x = a.x;
      row.y = lanes.lane_center(a.behavior.lane_id);
      row.width = a.behavior.length;
      row.height = a.behavior.width;
      row.x_velocity = a.v;
      row.x_acceleration = accel[i];
      row.lane_id = a.behavior.lane_id;
      rows.push_back(row);
    }
    std::vector<TrackRow *> frame_rows;
    for (std::size_t r = frame_begin; r < rows.size(); ++r) {
      frame_rows.push_back(&rows[r]);
    }
    annotate_sight(frame_rows);

    for (std::size_t i = 0; i < agents.size(); ++i) {
      Agent & a = agents[i];
      a.x += a.v * dt + 0.5 * accel[i] * dt * dt;
      a.v = std::max(0.0, a.v + accel[i] * dt);
    }
  }
  return TrackTable::from_rows(std::move(rows), meta);
}

}  // namespace lanepilot::dataset
