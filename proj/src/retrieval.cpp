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

#include "lanepilot/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

namespace lanepilot::retrieval
{

static_assert(std::endian::native == std::endian::little, "index snapshots assume little-endian");

StateFeatures features_of(const dataset::TrackRow & row)
{
  StateFeatures f;
  f.x = row.x;
  f.y = row.y;
  f.v_x = row.x_velocity;
  f.v_y = row.y_velocity;
  f.a_x = row.x_acceleration;
  f.a_y = row.y_acceleration;
  f.front_sight_distance = row.front_sight_distance;
  f.back_sight_distance = row.back_sight_distance;
  f.preceding_x_velocity = row.preceding_x_velocity;
  f.lane_id = row.lane_id;
  return f;
}

StateFeatures features_of(const env::Observation & obs)
{
  StateFeatures f;
  f.x = obs.ego.x;
  f.y = obs.ego.y;
  f.v_x = obs.ego.v_x;
  f.v_y = obs.ego.v_y;
  f.a_x = obs.ego.a_x;
  f.a_y = obs.ego.a_y;
  f.front_sight_distance = obs.front_sight_distance;
  f.back_sight_distance = obs.back_sight_distance;
  f.preceding_x_velocity = obs.preceding_x_velocity;
  f.lane_id = obs.lane_id;
  return f;
}

KeyVector vectorize(const StateFeatures & s, const kinematics::LaneGeometry & lanes)
{
  const double center = lanes.lane_center(s.lane_id);
  const double width = lanes.lane_width(s.lane_id);
  return {s.v_x / kSpeedScale,
          s.v_y / kSpeedScale,
          s.a_x / kAccelerationScale,
          s.a_y / kAccelerationScale,
          s.front_sight_distance / kDistanceScale,
          s.back_sight_distance / kDistanceScale,
          s.preceding_x_velocity / kSpeedScale,
          (s.y - center) / width};
}

StateFeatures unscale(std::span<const double> key, int lane_id,
                      const kinematics::LaneGeometry & lanes)
{
  if (key.size() != kKeyWidth) {
    throw RetrievalError("key width " + std::to_string(key.size()) + " is not " +
                         std::to_string(kKeyWidth));
  }
  StateFeatures s;
  s.lane_id = lane_id;
  s.v_x = key[0] * kSpeedScale;
  s.v_y = key[1] * kSpeedScale;
  s.a_x = key[2] * kAccelerationScale;
  s.a_y = key[3] * kAccelerationScale;
  s.front_sight_distance = key[4] * kDistanceScale;
  s.back_sight_distance = key[5] * kDistanceScale;
  s.preceding_x_velocity = key[6] * kSpeedScale;
  s.y = key[7] * lanes.lane_width(lane_id) + lanes.lane_center(lane_id);
  return s;
}

std::vector<KnowledgeRecord> extract_records(const dataset::TrackTable & table,
                                             std::int64_t recording_id, std::int64_t step_frames,
                                             std::int64_t stride_frames)
{
  if (step_frames < 1 || stride_frames < 1) {
    throw RetrievalError("step and stride must be positive");
  }
  std::map<std::int64_t, std::vector<const dataset::TrackRow *>> tracks;
  for (const dataset::TrackRow & row : table.rows()) {
    tracks[row.vehicle_id].push_back(&row);
  }
  std::vector<KnowledgeRecord> records;
  const auto horizon = static_cast<std::int64_t>(kPayloadHorizon);
  for (const auto & [id, track] : tracks) {
    // rows are frame-sorted and gap-free, so offsets index frames directly
    const auto len = static_cast<std::int64_t>(track.size());
    for (std::int64_t i = 0; i + horizon * step_frames < len; i += stride_frames) {
      const dataset::TrackRow & now = *track[static_cast<std::size_t>(i)];
      KnowledgeRecord rec;
      rec.key = vectorize(features_of(now), table.lanes());
      for (std::int64_t n = 1; n <= horizon; ++n) {
        const dataset::TrackRow & later = *track[static_cast<std::size_t>(i + n * step_frames)];
        rec.payload[static_cast<std::size_t>(n - 1)] = {
          later.x - now.x, later.y, later.x_velocity, later.y_velocity};
      }
      rec.source = {recording_id, id, now.frame};
      records.push_back(std::move(rec));
    }
  }
  return records;
}

KnnIndex KnnIndex::build(std::vector<KnowledgeRecord> records)
{
  if (records.empty()) {
    throw RetrievalError("cannot build an index from zero records");
  }
  KnnIndex index;
  index.dimension_ = records.front().key.size();
  if (index.dimension_ == 0) {
    throw RetrievalError("key vectors must be non-empty");
  }
  index.keys_.reserve(records.size() * index.dimension_);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].key.size() != index.dimension_) {
      throw RetrievalError(
        "record " + std::to_string(i) + " has key width " + std::to_string(records[i].key.size()) +
        ", expected " + std::to_string(index.dimension_));
    }
    index.keys_.insert(index.keys_.end(), records[i].key.begin(), records[i].key.end());
  }
  index.records_ = std::move(records);
  return index;
}

std::vector<KnnHit> KnnIndex::query(std::span<const double> q, std::size_t k) const
{
  if (q.size() != dimension_) {
    throw RetrievalError(
      "query width " + std::to_string(q.size()) + " does not match index dimension " +
      std::to_string(dimension_));
  }
  if (k == 0) {
    throw RetrievalError("k must be at least 1");
  }
  const std::size_t n = records_.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double * key = keys_.data() + i * dimension_;
    double acc = 0.0;
    for (std::size_t d = 0; d < dimension_; ++d) {
      const double diff = key[d] - q[d];
      acc += diff * diff;
    }
    dist[i] = acc;
  }
  const std::size_t take = std::min(k, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                    });
  std::vector<KnnHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    hits.push_back({records_[order[i]], dist[order[i]], order[i]});
  }
  return hits;
}

namespace
{

constexpr char kIndexMagic[8] = {'L', 'P', 'K', 'N', 'N', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

template <typename T>
void put(std::ostream & out, T value)
{
  out.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T>
T get(std::istream & in)
{
  T value{};
  if (!in.read(reinterpret_cast<char *>(&value), sizeof(T))) {
    throw RetrievalError("index snapshot truncated");
  }
  return value;
}

}  // namespace

void KnnIndex::save(std::ostream & out) const
{
  out.write(kIndexMagic, sizeof(kIndexMagic));
  put<std::uint32_t>(out, kIndexVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dimension_));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(records_.size()));
  for (const KnowledgeRecord & rec : records_) {
    for (double v : rec.key) {
      put<double>(out, v);
    }
    for (const TrajectorySample & s : rec.payload) {
      put<double>(out, s.dx);
      put<double>(out, s.y);
      put<double>(out, s.v_x);
      put<double>(out, s.v_y);
    }
    put<std::int64_t>(out, rec.source.recording_id);
    put<std::int64_t>(out, rec.source.vehicle_id);
    put<std::int64_t>(out, rec.source.frame);
  }
}

void KnnIndex::save(const std::filesystem::path & path) const
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw RetrievalError("cannot write index " + path.string());
  }
  save(out);
}

KnnIndex KnnIndex::load(std::istream & in)
{
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kIndexMagic, sizeof(magic)) != 0) {
    throw RetrievalError("not an index snapshot");
  }
  if (get<std::uint32_t>(in) != kIndexVersion) {
    throw RetrievalError("unsupported index snapshot version");
  }
  const auto dim = get<std::uint32_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (dim == 0 || count == 0 || count > (1ULL << 32)) {
    throw RetrievalError("index snapshot header is invalid");
  }
  std::vector<KnowledgeRecord> records;
  records.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t r = 0; r < count; ++r) {
    KnowledgeRecord rec;
    rec.key.resize(dim);
    for (double & v : rec.key) {
      v = get<double>(in);
    }
    for (TrajectorySample & s : rec.payload) {
      s.dx = get<double>(in);
      s.y = get<double>(in);
      s.v_x = get<double>(in);
      s.v_y = get<double>(in);
    }
    rec.source.recording_id = get<std::int64_t>(in);
    rec.source.vehicle_id = get<std::int64_t>(in);
    rec.source.frame = get<std::int64_t>(in);
    records.push_back(std::move(rec));
  }
  return build(std::move(records));
}

KnnIndex KnnIndex::load(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RetrievalError("cannot open index " + path.string());
  }
  return load(in);
}

std::vector<KnnHit> query_knn(const KnnIndex & index, std::span<const double> q, std::size_t k)
{
  return index.query(q, k);
}

}  // namespace lanepilot::retrieval
