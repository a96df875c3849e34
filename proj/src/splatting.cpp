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

#include "gaussfuse/splatting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

#include <Eigen/Eigenvalues>

namespace gaussfuse {

ProjectionOptions ProjectionOptions::FromConfig(const Config& config) {
  return {config.near_plane, config.cull_margin, config.cov2d_floor};
}

RenderOptions RenderOptions::FromConfig(const Config& config) {
  return {config.opacity, config.alpha_valid, config.tile_size,
          ProjectionOptions::FromConfig(config)};
}

std::optional<ProjectedGaussian> ProjectGaussian(const Gaussian& gaussian,
                                                 const RigidPose& camera_pose,
                                                 const CameraIntrinsics& intrinsics,
                                                 const ProjectionOptions& options) {
  const Mat3 world_to_cam = camera_pose.rotation.transpose();
  const Vec3 pc = world_to_cam * (gaussian.mean - camera_pose.translation);
  const double z = pc.z();
  if (!(z > options.near_plane)) return std::nullopt;

  ProjectedGaussian out;
  out.depth = z;
  out.mean2d = {intrinsics.fx * pc.x() / z + intrinsics.cx,
                intrinsics.fy * pc.y() / z + intrinsics.cy};
  const double mx = options.cull_margin * intrinsics.width;
  const double my = options.cull_margin * intrinsics.height;
  if (out.mean2d.x() < -mx || out.mean2d.x() > intrinsics.width + mx ||
      out.mean2d.y() < -my || out.mean2d.y() > intrinsics.height + my) {
    return std::nullopt;
  }

  Eigen::Matrix<double, 2, 3> jac;
  jac << intrinsics.fx / z, 0.0, -intrinsics.fx * pc.x() / (z * z),
         0.0, intrinsics.fy / z, -intrinsics.fy * pc.y() / (z * z);
  const Eigen::Matrix<double, 2, 3> t = jac * world_to_cam;
  Mat2 cov = t * gaussian.covariance * t.transpose();
  cov = 0.5 * (cov + cov.transpose());

  Eigen::SelfAdjointEigenSolver<Mat2> solver(cov);
  Vec2 values = solver.eigenvalues();
  if (values.minCoeff() < options.cov2d_floor) {
    values = values.cwiseMax(options.cov2d_floor);
    cov = solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
    cov = 0.5 * (cov + cov.transpose());
  }
  out.cov2d = cov;
  return out;
}

double SplatAlpha(const ProjectedGaussian& splat, const Mat2& conic, const Vec2& pixel,
                  double opacity) {
  const Vec2 d = pixel - splat.mean2d;
  const double d2 = d.dot(conic * d);
  if (!(d2 <= kSplatCutoffSq)) return 0.0;
  return opacity * std::exp(-0.5 * d2);
}

DepthRender Rasterize(std::span<const ProjectedGaussian> splats, int width, int height,
                      const RenderOptions& options, std::span<const Vec3> normals) {
  DepthRender render;
  render.width = width;
  render.height = height;
  render.alpha_valid = options.alpha_valid;
  const std::size_t pixels = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  render.expected_depth.assign(pixels, std::numeric_limits<double>::quiet_NaN());
  render.accumulated_alpha.assign(pixels, 0.0);
  const bool with_normals = !normals.empty();
  if (with_normals) render.expected_normal.assign(pixels, Vec3::Zero());
  if (pixels == 0) return render;

  // Front to back; equal depths keep input order.
  std::vector<std::size_t> order(splats.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return splats[a].depth < splats[b].depth;
  });

  const int ts = std::max(options.tile_size, 1);
  const int tiles_x = (width + ts - 1) / ts;
  const int tiles_y = (height + ts - 1) / ts;
  std::vector<std::vector<std::size_t>> tiles(static_cast<std::size_t>(tiles_x * tiles_y));
  std::vector<Mat2> conics(splats.size());
  for (std::size_t s : order) {
    const ProjectedGaussian& sp = splats[s];
    conics[s] = sp.cov2d.inverse();
    // The 3-sigma ellipse lies inside this square.
    const double lmax = Eigen::SelfAdjointEigenSolver<Mat2>(sp.cov2d,
                                                            Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    const double radius = std::sqrt(kSplatCutoffSq * lmax);
    const int x0 = std::max(0, static_cast<int>(std::floor(sp.mean2d.x() - radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(sp.mean2d.x() + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(sp.mean2d.y() - radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(sp.mean2d.y() + radius)));
    if (x0 > x1 || y0 > y1) continue;
    for (int ty = y0 / ts; ty <= y1 / ts; ++ty) {
      for (int tx = x0 / ts; tx <= x1 / ts; ++tx) {
        tiles[static_cast<std::size_t>(ty * tiles_x + tx)].push_back(s);
      }
    }
  }

  for (int ty = 0; ty < tiles_y; ++ty) {
    for (int tx = 0; tx < tiles_x; ++tx) {
      const auto& list = tiles[static_cast<std::size_t>(ty * tiles_x + tx)];
      if (list.empty()) continue;
      for (int y = ty * ts; y < std::min(height, (ty + 1) * ts); ++y) {
        for (int x = tx * ts; x < std::min(width, (tx + 1) * ts); ++x) {
          const Vec2 pixel(x, y);
          double transmittance = 1.0;
          double weight_sum = 0.0;
          double depth_sum = 0.0;
          Vec3 normal_sum = Vec3::Zero();
          for (std::size_t s : list) {
            const double a = SplatAlpha(splats[s], conics[s], pixel, options.opacity);
            if (a <= 0.0) continue;
            const double w = a * transmittance;
            weight_sum += w;
            depth_sum += w * splats[s].depth;
            if (with_normals) normal_sum += w * normals[splats[s].source];
            transmittance *= 1.0 - a;
          }
          const std::size_t idx = render.Index(x, y);
          render.accumulated_alpha[idx] = weight_sum;
          if (weight_sum >= options.alpha_valid) {
            render.expected_depth[idx] = depth_sum / weight_sum;
            if (with_normals && normal_sum.norm() > 0.0) {
              render.expected_normal[idx] = normal_sum.normalized();
            }
          }
        }
      }
    }
  }
  return render;
}

ProjectedSet ProjectAll(std::span<const Gaussian> gaussians, const RigidPose& camera_pose,
                        const CameraIntrinsics& intrinsics, const ProjectionOptions& options) {
  ProjectedSet out;
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    if (auto p = ProjectGaussian(gaussians[i], camera_pose, intrinsics, options)) {
      p->source = i;
      out.splats.push_back(*p);
    }
  }
  return out;
}

DepthRender RenderExpectedDepth(std::span<const Gaussian> gaussians,
                                const RigidPose& camera_pose,
                                const CameraIntrinsics& intrinsics,
                                const RenderOptions& options, bool with_normals) {
  const ProjectedSet projected =
      ProjectAll(gaussians, camera_pose, intrinsics, options.projection);
  std::vector<Vec3> normals;
  if (with_normals) {
    normals.reserve(gaussians.size());
    for (const Gaussian& g : gaussians) normals.push_back(g.normal);
  }
  return Rasterize(projected.splats, intrinsics.width, intrinsics.height, options, normals);
}

void WriteDepthPfm(const DepthRender& render, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  // Negative scale marks little-endian; rows run bottom to top.
  out << "Pf\n" << render.width << " " << render.height << "\n-1.0\n";
  for (int y = render.height - 1; y >= 0; --y) {
    for (int x = 0; x < render.width; ++x) {
      const double d = render.expected_depth[render.Index(x, y)];
      const float f = std::isfinite(d) ? static_cast<float>(d) : 0.0f;
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
}

void WriteAlphaPgm(const DepthRender& render, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << "P5\n" << render.width << " " << render.height << "\n255\n";
  for (double a : render.accumulated_alpha) {
    const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(a, 0.0, 1.0) * 255.0));
    out.put(static_cast<char>(v));
  }
}

}  // namespace gaussfuse
