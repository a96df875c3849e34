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

#ifndef GAUSSFUSE_REFINE_HPP_
#define GAUSSFUSE_REFINE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/localization.hpp"
#include "gaussfuse/splatting.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

// 2D Mahalanobis distance under the pooled covariance of two splats.
double PooledDistance2d(const ProjectedGaussian& a, const ProjectedGaussian& b);

// Softmax of -d/2 over the candidates.
std::vector<double> CandidateSoftmax(std::span<const double> distances);

// gamma = max_w / (alpha + max_w).
inline double RasterBlendWeight(double alpha, double max_weight) {
  return max_weight / (alpha + max_weight);
}

// Where each leftover-derived Gaussian went.
enum class RefineOutcome { kUnseen, kFront, kMerged };

struct RefineResult {
  std::size_t built = 0;     // |G_t|
  std::size_t merged = 0;
  std::size_t appended = 0;  // unseen + front
  std::size_t unseen = 0;    // landed on pixels without valid map depth
  std::size_t front = 0;     // failed the distance or depth test
  std::size_t updated = 0;   // map Gaussians that absorbed merges
  std::vector<RefineOutcome> outcomes;  // one per built Gaussian
};

// Builds Gaussians from the leftover pixels of `aligned`, then merges each
// one into nearby map Gaussians it sits behind or appends it. `camera_pose`
// is the camera-to-world pose used for both renders.
RefineResult Refine(GaussianMap& map, const Submap& submap,
                    std::span<const std::size_t> leftover_pixels, const Prediction& aligned,
                    const RigidPose& camera_pose, const Config& config, std::uint64_t seed);

// Variant taking prebuilt Gaussians; exposed for testing the association.
RefineResult RefineWithGaussians(GaussianMap& map, const Submap& submap,
                                 std::vector<Gaussian> built, const RigidPose& camera_pose,
                                 const CameraIntrinsics& intrinsics, const Config& config);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_REFINE_HPP_
