/*
 * Copyright 2026 The gaussfuse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GAUSSFUSE_PIPELINE_HPP_
#define GAUSSFUSE_PIPELINE_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/observation_source.hpp"
#include "gaussfuse/refine.hpp"
#include "gaussfuse/trajectory_io.hpp"

namespace gaussfuse {

struct BufferEntry {
  int frame_id = 0;
  Prediction aligned;  // in the map frame
};

// FIFO of recent frames with their map-aligned predictions.
class FrameBuffer {
 public:
  explicit FrameBuffer(std::size_t capacity);

  // Appends, evicting the oldest entry when full. Frame ids must increase.
  void Push(BufferEntry entry);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const BufferEntry& Newest() const;
  std::vector<int> FrameIds() const;
  const std::deque<BufferEntry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<BufferEntry> entries_;
};

struct InputSet {
  std::vector<int> frames;       // buffer, current, lookahead, anchor; no repeats
  std::vector<PoseHint> hints;   // the anchor only
};

InputSet BuildInputSet(const FrameBuffer& buffer, int current, int anchor,
                       const RigidPose& anchor_pose, std::optional<int> lookahead = std::nullopt);

enum class FrameStatus { kInitialized, kIntegrated, kSkipped };

struct FrameLog {
  int frame_id = 0;
  FrameStatus status = FrameStatus::kIntegrated;
  std::string message;
  std::size_t request_size = 0;
  std::size_t gate_rejected = 0;
  std::size_t em_integrated = 0;
  std::size_t em_updated = 0;
  std::size_t leftovers = 0;
  RefineResult refine;
  std::size_t map_size = 0;
  double coarse_residual = 0.0;
  double refine_rmse = 0.0;
};

struct RunOptions {
  // Frames whose localization is forced to fail.
  std::set<int> inject_failures;
  // World pose of the anchor; defaults to the source's ground truth when it
  // has one, identity otherwise.
  std::optional<RigidPose> anchor_pose;
  // Called after each integration with the updated map.
  std::function<void(const FrameLog&, const GaussianMap&)> on_frame;
};

struct RunResult {
  GaussianMap map;
  Trajectory trajectory;
  std::vector<FrameLog> log;
  std::map<int, RigidPose> provisional;  // chained, never emitted
  std::vector<int> processed_frames;
};

// Source frames visited at `config.frame_stride`.
std::vector<int> ProcessedFrames(int frame_count, int stride);

RunResult Run(ObservationSource& source, const Config& config, const RunOptions& options = {});

}  // namespace gaussfuse

#endif  // GAUSSFUSE_PIPELINE_HPP_
