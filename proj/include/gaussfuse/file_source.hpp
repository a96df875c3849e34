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

#ifndef GAUSSFUSE_FILE_SOURCE_HPP_
#define GAUSSFUSE_FILE_SOURCE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gaussfuse/observation_source.hpp"

namespace gaussfuse {

// On-disk prediction bundle: <dir>/points.ply and <dir>/meta.json.
void WritePredictionBundle(const Prediction& prediction, const std::string& dir,
                           double timestamp);
Prediction ReadPredictionBundle(const std::string& dir, double* timestamp = nullptr);

std::string BundleDirectoryName(int frame_id);  // frame_000042

// Serves precomputed bundles from `root`/frame_XXXXXX. Each request is
// rigidly re-anchored so the hinted frame sits at its hinted pose. An
// optional `root`/gt.tum supplies ground-truth poses keyed by timestamp
// order.
class FileSource final : public ObservationSource {
 public:
  explicit FileSource(std::string root);

  int FrameCount() const override { return frame_count_; }
  double Timestamp(int frame_id) const override;
  CameraIntrinsics Intrinsics() const override { return intrinsics_; }
  int FeatureDim() const override { return feature_dim_; }
  std::vector<Prediction> Infer(std::span<const int> frame_ids,
                                std::span<const PoseHint> hints) override;
  std::optional<RigidPose> GroundTruthPose(int frame_id) const override;

 private:
  const Prediction& Load(int frame_id);

  std::string root_;
  int frame_count_ = 0;
  int feature_dim_ = 0;
  CameraIntrinsics intrinsics_;
  std::map<int, std::string> dirs_;
  std::map<int, double> timestamps_;
  std::map<int, Prediction> cache_;
  std::map<int, RigidPose> ground_truth_;
};

}  // namespace gaussfuse

#endif  // GAUSSFUSE_FILE_SOURCE_HPP_
