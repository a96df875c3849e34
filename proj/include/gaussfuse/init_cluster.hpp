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

#ifndef GAUSSFUSE_INIT_CLUSTER_HPP_
#define GAUSSFUSE_INIT_CLUSTER_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

// Structure-of-arrays point set carrying every per-point attribute a
// Gaussian is built from. `features` holds one column per point.
struct AttributedPoints {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Vec3> colors;
  Eigen::MatrixXd features;

  std::size_t size() const { return points.size(); }

  // Valid pixels of `prediction`, optionally restricted to `pixel_indices`.
  static AttributedPoints FromPrediction(const Prediction& prediction);
  static AttributedPoints FromPrediction(const Prediction& prediction,
                                         std::span<const std::size_t> pixel_indices);
  void Append(const AttributedPoints& other);
  AttributedPoints Subset(std::span<const std::size_t> indices) const;
};

struct ClusterResult {
  std::vector<Vec3> centroids;
  std::vector<int> assignment;
  // Sum of squared distances after each assignment step.
  std::vector<double> objective_history;
  int iterations = 0;
};

// max(1, floor(total_points / (lambda * frames))).
std::size_t ChooseK(std::size_t total_points, std::size_t frames, double lambda);

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded
// from the point farthest from its centroid. Throws when points < k.
ClusterResult KMeans(std::span<const Vec3> points, std::size_t k, std::uint64_t seed,
                     int max_iterations = 25, double tolerance = 1e-6);

struct NeighborhoodOptions {
  double covariance_floor = 1e-8;
  // exp(-d^2/2) instead of exp(-d/2) for the kernel weights.
  bool squared_distance = false;
};

struct NeighborhoodGaussian {
  Gaussian gaussian;
  std::vector<double> weights;  // normalized kernel weights, one per neighbor
  std::size_t feature_source = 0;  // neighbor whose feature was adopted
  bool degenerate = false;         // covariance needed flooring
};

// Parameterizes one Gaussian centered at `center` from its neighbors:
// sample covariance, Mahalanobis kernel weights, weighted normal and color,
// and the neighbor feature closest to the weighted mean feature.
NeighborhoodGaussian GaussianFromNeighborhood(const Vec3& center,
                                              const AttributedPoints& neighbors,
                                              const NeighborhoodOptions& options = {});

// Clusters `points` into ChooseK(points, frames, lambda) groups and builds
// one Gaussian per centroid from its M nearest points.
struct BuildStats {
  std::size_t clusters = 0;
  std::size_t degenerate = 0;
};
std::vector<Gaussian> BuildGaussians(const AttributedPoints& points, std::size_t frames,
                                     const Config& config, std::uint64_t seed,
                                     BuildStats* stats = nullptr);

// Initial map from predictions that already share one frame.
GaussianMap InitializeMap(std::span<const Prediction> predictions, const Config& config,
                          BuildStats* stats = nullptr);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_INIT_CLUSTER_HPP_
