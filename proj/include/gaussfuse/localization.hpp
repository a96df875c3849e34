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

#ifndef GAUSSFUSE_LOCALIZATION_HPP_
#define GAUSSFUSE_LOCALIZATION_HPP_

#include <span>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/icp.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

// Map Gaussians retrieved around the currently observable region, with a
// point view of their means for registration.
struct Submap {
  std::vector<std::size_t> gaussian_indices;  // ascending
  PointCloud cloud;                            // means, normals, colors
  std::vector<double> normal_variance;         // n^T Sigma n per Gaussian
  bool fallback = false;                       // box was empty: whole map

  std::size_t size() const { return gaussian_indices.size(); }
};

struct AxisAlignedBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
};

// Bounding box of `points`, grown by `margin` times its extent on each side.
AxisAlignedBox ExpandedBounds(std::span<const Vec3> points, double margin);

// Gaussians of every occupied voxel intersecting the expanded bounding box
// of `reference_points`. Falls back to the whole map when nothing is hit.
Submap SelectSubmap(const GaussianMap& map, std::span<const Vec3> reference_points,
                    double margin);
Submap WholeMap(const GaussianMap& map);

// Inverse-variance pair weights sigma^2 / (n^T Sigma n + sigma^2): a mean's
// plane residual carries its Gaussian's spread along the normal. sigma <= 0
// gives unit weights.
std::vector<double> PlaneWeights(const Submap& submap, double sigma);

struct CoarseRegistration {
  RigidPose pose;        // prediction frame -> map frame
  RigidPose icp_pose;    // new prediction -> shared prediction (same inference)
  RigidPose drift;       // shared prediction, new inference -> old alignment
  std::size_t composed_pairs = 0;
  // Point-to-plane RMS of the composed pairs under `pose`.
  double residual = 0.0;
};

// Registers `current` to the map through the frame observed in two
// consecutive inferences: ICP pairs current -> shared_new are carried over
// pixel-wise to shared_old, which is already map-aligned.
CoarseRegistration TransferCoarseRegistration(const Prediction& current,
                                              const Prediction& shared_new,
                                              const Prediction& shared_old,
                                              const Config& config);

struct LocalizationResult {
  RigidPose world_from_prediction;
  RigidPose camera_pose;  // camera-to-world of the localized frame
  Prediction aligned;     // the input expressed in the map frame
  CoarseRegistration coarse;
  IcpResult refinement;
  Submap submap;
};

// Coarse transfer registration followed by colored ICP against the
// submap selected around shared_old.
LocalizationResult Localize(const Prediction& current, const Prediction& shared_new,
                            const Prediction& shared_old, const GaussianMap& map,
                            const Config& config);

// Valid pixels, every `stride`-th, with their pixel indices.
PointCloud SampleCloud(const Prediction& prediction, int stride,
                       std::vector<std::size_t>* pixel_indices = nullptr);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_LOCALIZATION_HPP_
