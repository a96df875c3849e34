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

#include "gaussfuse/trajectory_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gaussfuse {

void Trajectory::Append(const TrajectoryEntry& entry) {
  if (!entries_.empty() && entry.frame_id <= entries_.back().frame_id) {
    throw Error("trajectory: frame " + std::to_string(entry.frame_id) +
                " does not follow frame " + std::to_string(entries_.back().frame_id));
  }
  entries_.push_back(entry);
}

const TrajectoryEntry* Trajectory::Find(int frame_id) const {
  for (const TrajectoryEntry& e : entries_) {
    if (e.frame_id == frame_id) return &e;
  }
  return nullptr;
}

std::optional<RigidPose> Trajectory::PoseOf(int frame_id) const {
  const TrajectoryEntry* e = Find(frame_id);
  if (e == nullptr) return std::nullopt;
  return e->pose;
}

std::string FormatTum(const Trajectory& trajectory) {
  std::ostringstream out;
  out << std::setprecision(9) << std::fixed;
  for (const TrajectoryEntry& e : trajectory.entries()) {
    const Eigen::Quaterniond q = e.pose.Quaternion();
    out << std::setprecision(6) << e.timestamp << std::setprecision(9) << " "
        << e.pose.translation.x() << " " << e.pose.translation.y() << " "
        << e.pose.translation.z() << " " << q.x() << " " << q.y() << " " << q.z() << " "
        << q.w() << "\n";
  }
  return out.str();
}

void WriteTum(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << FormatTum(trajectory);
}

Trajectory ReadTum(const std::string& path, double fps) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  Trajectory trajectory;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected 8 numbers");
    }
    TrajectoryEntry e;
    e.timestamp = ts;
    e.frame_id = static_cast<int>(std::lround(ts * fps));
    e.pose = RigidPose::FromQuaternion(Eigen::Quaterniond(qw, qx, qy, qz).normalized(),
                                       Vec3(tx, ty, tz));
    trajectory.Append(e);
  }
  return trajectory;
}

}  // namespace gaussfuse
