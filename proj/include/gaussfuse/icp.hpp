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

#ifndef GAUSSFUSE_ICP_HPP_
#define GAUSSFUSE_ICP_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

class RegistrationError : public Error {
 public:
  using Error::Error;
};

// Closed-form weighted alignment dst ~ s R src + t (Umeyama). With
// `with_scale` false the scale is fixed to 1 (Kabsch).
struct SimilarityFit {
  RigidPose pose;
  double scale = 1.0;
  double rmse = 0.0;  // weighted residual after the fit
};
SimilarityFit FitSimilarity(std::span<const Vec3> src, std::span<const Vec3> dst,
                            std::span<const double> weights, bool with_scale);

struct CorrespondenceSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (source, target)
  std::vector<double> weights;
  std::size_t size() const { return pairs.size(); }
};

struct IcpOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;       // stop when the pose increment is smaller
  double gate_factor = 3.0;      // reject pairs beyond factor * median distance
  double geometric_weight = 0.968;
  int gradient_neighbors = 12;
  std::size_t min_pairs = 6;
  // Colored ICP drops pairs whose |normal cosine| is below this; -1 disables.
  double min_normal_cos = -1.0;
  // Tukey biweight constant (0 = plain least squares) and the floors of the
  // MAD-based residual scales: plane residuals in m, intensity residuals.
  double robust_k = 0.0;
  double robust_scale_min = 0.005;
  double robust_color_scale_min = 0.02;

  static IcpOptions FromConfig(const Config& config);
};

struct IcpResult {
  RigidPose pose;
  CorrespondenceSet correspondences;
  // Mean squared point-to-plane residual of the pairs of each iteration,
  // evaluated before that iteration's solve.
  std::vector<double> residual_history;
  double rmse = 0.0;  // point-to-plane RMS over the final pairs
  int iterations = 0;
  bool converged = false;
};

// Minimizes sum w_q ((R s + t - q) . n_q)^2 over gated nearest-neighbor pairs.
// `target` needs points and unit normals. `target_weights` (one per target
// point, default 1) scale each pair's residuals.
IcpResult IcpPointToPlane(std::span<const Vec3> source, const PointCloud& target,
                          const RigidPose& init, const IcpOptions& options = {},
                          std::span<const double> target_weights = {});

// Joint geometric and photometric objective; the photometric term compares
// source intensity with the target intensity extended along its local
// gradient in the tangent plane. `source` needs points and colors, `target`
// points, normals and colors. No scale is estimated.
IcpResult IcpColored(const PointCloud& source, const PointCloud& target,
                     const RigidPose& init, const IcpOptions& options = {},
                     std::span<const double> target_weights = {});

// Per-point intensity gradient in each target tangent plane.
std::vector<Vec3> ComputeColorGradients(const PointCloud& target, int neighbors);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_ICP_HPP_
