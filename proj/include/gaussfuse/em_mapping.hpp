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

#ifndef GAUSSFUSE_EM_MAPPING_HPP_
#define GAUSSFUSE_EM_MAPPING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/localization.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

// Points of an aligned prediction split by the normal and Mahalanobis
// gates, with the nearest Gaussians of each passing point.
struct GateResult {
  std::size_t k = 0;                     // neighbors per passing point
  std::vector<std::size_t> passing;      // pixel indices
  std::vector<std::size_t> rejected;     // pixel indices
  std::vector<std::size_t> neighbors;    // map indices, passing.size() x k
};

// Keeps a valid point iff the mean of n_k . n over its k nearest Gaussians
// (by mean distance) is at least tau_normal and its smallest Mahalanobis
// distance is at most tau_sigma.
GateResult GatePoints(const Prediction& aligned, const Submap& submap, const GaussianMap& map,
                      const Config& config);

struct GatedAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> points;      // pixel indices
  std::vector<std::size_t> neighbors;   // points.size() x k map indices
  std::vector<double> d_sigma;          // Mahalanobis distances
  std::vector<double> d_normal;         // normal agreements
  std::vector<double> d_cos;            // feature cosines
  std::vector<double> log_likelihood;   // p
  std::vector<double> responsibilities; // softmax of p per point
  std::vector<double> pi;               // max p - max p_det per point
  std::vector<std::uint8_t> integrate;  // |pi| <= tau_pi
  std::vector<std::size_t> dropped;     // pixel indices with non-finite p

  std::size_t size() const { return points.size(); }
};

// p = -d^2/2 - log|S| + kappa_n (d_n - 1) + kappa_f (d_cos - 1).
double LogLikelihood(double d_sigma, double log_det, double d_normal, double d_cos,
                     double kappa_normal, double kappa_feature);

GatedAssignment ComputeResponsibilities(const Prediction& aligned, const GateResult& gate,
                                        const GaussianMap& map, const Config& config);

// Balance of the support of `gaussian` along its two tangential principal
// axes: min over the axes of 2 min(sum_+ r, sum_- r) with responsibilities
// normalized to unit sum, clamped to [delta_min, 1]. Points on an axis count
// half to each side.
double IsotropyScore(const Gaussian& gaussian, std::span<const Vec3> points,
                     std::span<const double> responsibilities, double delta_min);

// alpha_t = delta / (alpha_{t-1} + delta).
inline double NextBlendState(double previous, double delta) {
  return delta / (previous + delta);
}

struct EmUpdateResult {
  std::vector<std::size_t> leftovers;  // pixel indices left for refinement
  std::size_t updated = 0;             // Gaussians that received an M-step
  std::size_t integrated_points = 0;
};

// One responsibility-weighted M-step blended into each supported Gaussian
// with its running-average weight. Features are left untouched.
EmUpdateResult EmUpdate(GaussianMap& map, const Prediction& aligned,
                        const GatedAssignment& assignment, const Config& config);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_EM_MAPPING_HPP_
