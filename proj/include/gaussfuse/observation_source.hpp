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

#ifndef GAUSSFUSE_OBSERVATION_SOURCE_HPP_
#define GAUSSFUSE_OBSERVATION_SOURCE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct PoseHint {
  int frame_id = 0;
  RigidPose pose;  // camera-to-world
};

// Producer of pixel-aligned predictions. Every call to Infer returns one
// Prediction per requested frame, all in one common frame in which the
// hinted frame (if any) sits at its hinted pose.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;

  virtual int FrameCount() const = 0;
  virtual double Timestamp(int frame_id) const = 0;
  virtual CameraIntrinsics Intrinsics() const = 0;
  virtual int FeatureDim() const = 0;
  virtual std::vector<Prediction> Infer(std::span<const int> frame_ids,
                                        std::span<const PoseHint> hints) = 0;
  virtual std::optional<RigidPose> GroundTruthPose(int /*frame_id*/) const {
    return std::nullopt;
  }
};

}  // namespace gaussfuse

#endif  // GAUSSFUSE_OBSERVATION_SOURCE_HPP_
