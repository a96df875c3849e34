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

#ifndef GAUSSFUSE_TRAJECTORY_IO_HPP_
#define GAUSSFUSE_TRAJECTORY_IO_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct TrajectoryEntry {
  int frame_id = 0;
  double timestamp = 0.0;
  RigidPose pose;  // camera-to-world
};

// Poses ordered by strictly increasing frame id.
class Trajectory {
 public:
  // Throws unless `entry.frame_id` exceeds the last frame id.
  void Append(const TrajectoryEntry& entry);
  const TrajectoryEntry* Find(int frame_id) const;
  std::optional<RigidPose> PoseOf(int frame_id) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<TrajectoryEntry>& entries() const { return entries_; }

 private:
  std::vector<TrajectoryEntry> entries_;
};

// `timestamp tx ty tz qx qy qz qw` per line.
void WriteTum(const Trajectory& trajectory, const std::string& path);
std::string FormatTum(const Trajectory& trajectory);
// Frame ids are recovered as round(timestamp * fps).
Trajectory ReadTum(const std::string& path, double fps = 30.0);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_TRAJECTORY_IO_HPP_
