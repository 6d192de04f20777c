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

#ifndef LANEPILOT__RETRIEVAL_HPP_
#define LANEPILOT__RETRIEVAL_HPP_

#include "lanepilot/dataset_io.hpp"
#include "lanepilot/environment.hpp"
#include "lanepilot/kinematics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace lanepilot::retrieval
{

class RetrievalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// The state fields a retrieval key is built from.
struct StateFeatures
{
  double x{0.0};
  double y{0.0};
  double v_x{0.0};
  double v_y{0.0};
  double a_x{0.0};
  double a_y{0.0};
  double front_sight_distance{dataset::kNoVehicleInSight};
  double back_sight_distance{dataset::kNoVehicleInSight};
  double preceding_x_velocity{0.0};
  int lane_id{1};
};

StateFeatures features_of(const dataset::TrackRow & row);
StateFeatures features_of(const env::Observation & obs);

/// Scaling constants of the key layout.
inline constexpr double kSpeedScale = 40.0;         // m/s
inline constexpr double kAccelerationScale = 5.0;   // m/s^2
inline constexpr double kDistanceScale = 1000.0;    // m

/// Key layout (width 8):
///   v_x/40, v_y/40, a_x/5, a_y/5, front_sight/1000, back_sight/1000, preceding_v_x/40,
///   (y - lane center) / lane width
/// Absolute x is left out so similar situations match anywhere along the road.
inline constexpr std::size_t kKeyWidth = 8;
using KeyVector = std::vector<double>;

KeyVector vectorize(const StateFeatures & state, const kinematics::LaneGeometry & lanes);

/// Inverse of vectorize for every field except x (returned as 0).
StateFeatures unscale(std::span<const double> key, int lane_id,
                      const kinematics::LaneGeometry & lanes);

/// One future sample of a historical vehicle. dx is measured from the vehicle's own x at
/// the keyed frame; y and the speeds are absolute.
struct TrajectorySample
{
  double dx{0.0};
  double y{0.0};
  double v_x{0.0};
  double v_y{0.0};

  bool operator==(const TrajectorySample &) const = default;
};

inline constexpr std::size_t kPayloadHorizon = 3;

struct RecordSource
{
  std::int64_t recording_id{0};
  std::int64_t vehicle_id{0};
  std::int64_t frame{0};

  bool operator==(const RecordSource &) const = default;
};

struct KnowledgeRecord
{
  KeyVector key;
  std::array<TrajectorySample, kPayloadHorizon> payload{};
  RecordSource source;

  bool operator==(const KnowledgeRecord &) const = default;
};

/// Records for every (vehicle, frame) that still has kPayloadHorizon samples spaced
/// step_frames apart. stride_frames thins the keyed frames.
std::vector<KnowledgeRecord> extract_records(const dataset::TrackTable & table,
                                             std::int64_t recording_id,
                                             std::int64_t step_frames = 10,
                                             std::int64_t stride_frames = 1);

struct KnnHit
{
  KnowledgeRecord record;
  double distance_sq{0.0};
  std::size_t index{0};
};

/// Exact L2 index over a fixed record set. Immutable after build.
class KnnIndex
{
public:
  /// Throws RetrievalError on empty input or mixed key widths.
  static KnnIndex build(std::vector<KnowledgeRecord> records);

  std::size_t size() const { return records_.size(); }
  std::size_t dimension() const { return dimension_; }
  const KnowledgeRecord & record(std::size_t i) const { return records_.at(i); }

  /// min(k, size) nearest records by squared L2, ascending; ties keep insertion order.
  std::vector<KnnHit> query(std::span<const double> q, std::size_t k = 3) const;

  /// Binary snapshot, little-endian:
  ///   "LPKNNIDX" | u32 version=1 | u32 dimension | u64 count |
  ///   per record: dimension f64 key, 12 f64 payload (dx, y, v_x, v_y per sample),
  ///   3 i64 source (recording, vehicle, frame)
  void save(std::ostream & out) const;
  void save(const std::filesystem::path & path) const;
  static KnnIndex load(std::istream & in);
  static KnnIndex load(const std::filesystem::path & path);

private:
  std::size_t dimension_{0};
  std::vector<double> keys_;  // row-major, one row per record
  std::vector<KnowledgeRecord> records_;
};

std::vector<KnnHit> query_knn(const KnnIndex & index, std::span<const double> q, std::size_t k = 3);

}  // namespace lanepilot::retrieval

#endif  // LANEPILOT__RETRIEVAL_HPP_
