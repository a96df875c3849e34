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

#include "gaussfuse/refine.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gaussfuse/init_cluster.hpp"

namespace gaussfuse {

double PooledDistance2d(const ProjectedGaussian& a, const ProjectedGaussian& b) {
  const Vec2 delta = a.mean2d - b.mean2d;
  const Mat2 pooled = a.cov2d + b.cov2d;
  return std::sqrt(std::max(delta.dot(pooled.ldlt().solve(delta)), 0.0));
}

std::vector<double> CandidateSoftmax(std::span<const double> distances) {
  std::vector<double> out(distances.size());
  if (distances.empty()) return out;
  const double lo = *std::min_element(distances.begin(), distances.end());
  double z = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    out[i] = std::exp(-0.5 * (distances[i] - lo));
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

namespace {

struct Contribution {
  std::size_t built = 0;
  double weight = 0.0;
};

}  // namespace

RefineResult RefineWithGaussians(GaussianMap& map, const Submap& submap,
                                 std::vector<Gaussian> built, const RigidPose& camera_pose,
                                 const CameraIntrinsics& intrinsics, const Config& config) {
  RefineResult result;
  result.built = built.size();
  result.outcomes.assign(built.size(), RefineOutcome::kUnseen);
  if (built.empty()) return result;

  const RenderOptions render_options = RenderOptions::FromConfig(config);
  std::vector<Gaussian> submap_gaussians;
  submap_gaussians.reserve(submap.size());
  for (std::size_t idx : submap.gaussian_indices) submap_gaussians.push_back(map[idx]);
  const ProjectedSet map_splats =
      ProjectAll(submap_gaussians, camera_pose, intrinsics, render_options.projection);
  const DepthRender map_render = Rasterize(map_splats.splats, intrinsics.width,
                                           intrinsics.height, render_options);
  const DepthRender built_render =
      RenderExpectedDepth(built, camera_pose, intrinsics, render_options);

  const std::size_t k2d = static_cast<std::size_t>(std::max(config.k_2d, 1));
  std::map<std::size_t, std::vector<Contribution>> merges;  // keyed by map index
  std::vector<std::pair<double, std::size_t>> ranked;
  std::vector<double> dists;
  std::vector<double> cosines;

  for (std::size_t i = 0; i < built.size(); ++i) {
    const auto projected =
        ProjectGaussian(built[i], camera_pose, intrinsics, render_options.projection);
    if (!projected) continue;  // unseen
    const int px = static_cast<int>(std::lround(projected->mean2d.x()));
    const int py = static_cast<int>(std::lround(projected->mean2d.y()));
    if (!map_render.Valid(px, py)) continue;

    const double depth_map = map_render.expected_depth[map_render.Index(px, py)];
    const double depth_built = built_render.Valid(px, py)
                                   ? built_render.expected_depth[built_render.Index(px, py)]
                                   : projected->depth;

    ranked.clear();
    for (std::size_t s = 0; s < map_splats.splats.size(); ++s) {
      ranked.emplace_back((map_splats.splats[s].mean2d - projected->mean2d).squaredNorm(), s);
    }
    const std::size_t count = std::min(k2d, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(count),
                      ranked.end());
    dists.clear();
    cosines.clear();
    for (std::size_t c = 0; c < count; ++c) {
      const ProjectedGaussian& cand = map_splats.splats[ranked[c].second];
      const Gaussian& mg = submap_gaussians[cand.source];
      dists.push_back(PooledDistance2d(cand, *projected));
      cosines.push_back(mg.feature.size() == built[i].feature.size() && mg.feature.size() > 0
                            ? mg.feature.dot(built[i].feature)
                            : 1.0);
    }
    const std::vector<double> soft = CandidateSoftmax(dists);

    bool merged = false;
    const bool behind = depth_built > depth_map;
    for (std::size_t c = 0; c < count && behind; ++c) {
      if (!(dists[c] < config.tau_sigma_2d) || !(cosines[c] > 0.0)) continue;
      const std::size_t map_index =
          submap.gaussian_indices[map_splats.splats[ranked[c].second].source];
      merges[map_index].push_back({i, soft[c] * cosines[c]});
      merged = true;
    }
    result.outcomes[i] = merged ? RefineOutcome::kMerged : RefineOutcome::kFront;
  }

  for (const auto& [map_index, contributions] : merges) {
    const Gaussian& old = map[map_index];
    double total = 0.0;
    double max_w = 0.0;
    Vec3 mean = Vec3::Zero();
    Mat3 cov = Mat3::Zero();
    Vec3 color = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    for (const Contribution& c : contributions) {
      const Gaussian& g = built[c.built];
      total += c.weight;
      max_w = std::max(max_w, c.weight);
      mean += c.weight * g.mean;
      cov += c.weight * g.covariance;
      color += c.weight * g.color;
      normal += c.weight * (g.normal.dot(old.normal) < 0.0 ? -g.normal : g.normal);
    }
    if (!(total > 0.0)) continue;
    mean /= total;
    cov /= total;
    color /= total;
    const double nn = normal.norm();
    normal = nn > 1e-12 ? Vec3(normal / nn) : old.normal;

    const double gamma = RasterBlendWeight(old.blend_state, max_w);
    Gaussian g = old;
    g.mean = (1.0 - gamma) * old.mean + gamma * mean;
    g.covariance =
        FloorCovariance((1.0 - gamma) * old.covariance + gamma * cov, config.covariance_floor);
    g.color = ((1.0 - gamma) * old.color + gamma * color).cwiseMax(0.0).cwiseMin(1.0);
    const Vec3 blended = (1.0 - gamma) * old.normal + gamma * normal;
    g.normal = blended.norm() > 1e-12 ? Vec3(blended.normalized()) : old.normal;
    map.Update(map_index, std::move(g));
    ++result.updated;
  }

  for (std::size_t i = 0; i < built.size(); ++i) {
    switch (result.outcomes[i]) {
      case RefineOutcome::kMerged:
        ++result.merged;
        continue;
      case RefineOutcome::kUnseen:
        ++result.unseen;
        break;
      case RefineOutcome::kFront:
        ++result.front;
        break;
    }
    built[i].blend_state = 1.0;
    map.Add(std::move(built[i]));
    ++result.appended;
  }
  return result;
}

RefineResult Refine(GaussianMap& map, const Submap& submap,
                    std::span<const std::size_t> leftover_pixels, const Prediction& aligned,
                    const RigidPose& camera_pose, const Config& config, std::uint64_t seed) {
  if (leftover_pixels.empty()) return {};
  const AttributedPoints points = AttributedPoints::FromPrediction(aligned, leftover_pixels);
  if (points.size() == 0) return {};
  std::vector<Gaussian> built = BuildGaussians(points, 1, config, seed);
  return RefineWithGaussians(map, submap, std::move(built), camera_pose, aligned.intrinsics,
                             config);
}

}  // namespace gaussfuse
