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

#ifndef GAUSSFUSE_SPLATTING_HPP_
#define GAUSSFUSE_SPLATTING_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct ProjectedGaussian {
  Vec2 mean2d = Vec2::Zero();  // pixels; pixel (x, y) is centered at (x, y)
  Mat2 cov2d = Mat2::Identity();
  double depth = 0.0;          // camera-frame z
  std::size_t source = 0;      // index into the projected list
};

struct ProjectionOptions {
  double near_plane = 0.01;
  double cull_margin = 0.2;  // fraction of the image size around the frame
  double cov2d_floor = 0.3;  // px^2

  static ProjectionOptions FromConfig(const Config& config);
};

// Pinhole projection with the perspective Jacobian J: cov2d = J W S W^T J^T
// where W rotates world into camera axes. `camera_pose` is camera-to-world.
// Returns nothing for Gaussians behind the near plane or off screen.
std::optional<ProjectedGaussian> ProjectGaussian(const Gaussian& gaussian,
                                                 const RigidPose& camera_pose,
                                                 const CameraIntrinsics& intrinsics,
                                                 const ProjectionOptions& options = {});

struct RenderOptions {
  double opacity = 0.8;
  double alpha_valid = 0.5;
  int tile_size = 16;
  ProjectionOptions projection;

  static RenderOptions FromConfig(const Config& config);
};

// Maximum squared Mahalanobis distance at which a splat contributes.
inline constexpr double kSplatCutoffSq = 9.0;

// Alpha of one splat at `pixel`: opacity * exp(-d^2 / 2) inside the 3-sigma
// ellipse, zero outside.
double SplatAlpha(const ProjectedGaussian& splat, const Mat2& conic, const Vec2& pixel,
                  double opacity);

struct DepthRender {
  int width = 0;
  int height = 0;
  std::vector<double> expected_depth;     // NaN where invalid
  std::vector<double> accumulated_alpha;
  std::vector<Vec3> expected_normal;      // filled when normals were supplied
  double alpha_valid = 0.5;

  std::size_t Index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  bool Valid(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height &&
           accumulated_alpha[Index(x, y)] >= alpha_valid;
  }
};

// Front-to-back compositing of pre-projected splats over a tiled image.
// `normals`, when non-empty, is composited alongside depth.
DepthRender Rasterize(std::span<const ProjectedGaussian> splats, int width, int height,
                      const RenderOptions& options, std::span<const Vec3> normals = {});

struct ProjectedSet {
  std::vector<ProjectedGaussian> splats;  // `source` indexes the input list
};
ProjectedSet ProjectAll(std::span<const Gaussian> gaussians, const RigidPose& camera_pose,
                        const CameraIntrinsics& intrinsics, const ProjectionOptions& options);

DepthRender RenderExpectedDepth(std::span<const Gaussian> gaussians,
                                const RigidPose& camera_pose,
                                const CameraIntrinsics& intrinsics,
                                const RenderOptions& options, bool with_normals = false);

// Debug output: depth as PFM, accumulated alpha as 8-bit PGM.
void WriteDepthPfm(const DepthRender& render, const std::string& path);
void WriteAlphaPgm(const DepthRender& render, const std::string& path);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_SPLATTING_HPP_
