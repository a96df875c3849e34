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

#ifndef GAUSSFUSE_CONFIG_HPP_
#define GAUSSFUSE_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace gaussfuse {

struct Config {
  // Mapping parameters.
  int buffer_size = 10;
  double lambda = 128.0;             // points per Gaussian per frame
  double tau_normal = 0.5;           // mean normal agreement gate
  double tau_sigma = 4.6;            // Mahalanobis gate
  int k_neighbors = 16;              // Gaussians per point
  double kappa_normal = 5.0;
  double kappa_feature = 5.0;
  double tau_pi = 8.0;               // log-space integration gate
  int k_2d = 3;                      // image-plane candidates per Gaussian
  double tau_sigma_2d = 4.6;

  // Gaussian construction.
  int covariance_neighbors = 32;     // M
  double covariance_floor = 1e-8;    // m^2
  bool kernel_squared_distance = false;
  int kmeans_max_iterations = 25;
  double kmeans_tolerance = 1e-6;    // m

  // Map index and submap selection.
  double voxel_size = 0.2;           // m
  double submap_margin = 0.1;        // fraction of box extent per axis

  // Registration.
  int icp_max_iterations = 50;
  double icp_tolerance = 1e-6;
  double icp_gate_factor = 3.0;      // multiple of the median pair distance
  double colored_icp_geometric_weight = 0.968;
  int color_gradient_neighbors = 12;
  int icp_source_stride = 2;         // pixel subsampling of the ICP source
  double icp_plane_sigma = 0.0;      // m; map-pair weights, <= 0 disables
  double icp_min_normal_cos = -1.0;  // colored ICP normal-compatibility test
  double icp_robust_k = 4.685;       // Tukey constant, 0 disables
  double icp_robust_scale_min = 0.0025;  // m
  double icp_robust_color_scale_min = 0.02;
  bool coarse_use_pair_weights = true;

  // EM update.
  double delta_min = 0.01;
  double responsibility_min = 1e-3;

  // Rasterization-based refinement.
  double opacity = 0.8;
  double alpha_valid = 0.5;
  double near_plane = 0.01;          // m
  double cov2d_floor = 0.3;          // px^2
  double cull_margin = 0.2;          // fraction of the image size
  int tile_size = 16;

  // Pipeline.
  int frame_stride = 10;
  std::uint64_t seed = 0;

  // Evaluation.
  double f1_threshold = 0.2;         // m
  bool densify = false;
  int densify_pixel_stride = 4;

  // Returns the list of violated constraints, empty when valid.
  std::vector<std::string> Validate() const;
};

Config LoadConfig(const std::string& path);
void SaveConfig(const Config& config, const std::string& path);
std::string ConfigToJson(const Config& config);
Config ConfigFromJson(const std::string& text);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_CONFIG_HPP_
