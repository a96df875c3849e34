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

#include "gaussfuse/localization.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

namespace gaussfuse {

PointCloud SampleCloud(const Prediction& prediction, int stride,
                       std::vector<std::size_t>* pixel_indices) {
  PointCloud cloud;
  if (pixel_indices != nullptr) pixel_indices->clear();
  std::size_t count = 0;
  for (std::size_t i = 0; i < prediction.valid.size(); ++i) {
    if (!prediction.valid[i]) continue;
    if (count++ % static_cast<std::size_t>(std::max(stride, 1)) != 0) continue;
    cloud.points.push_back(prediction.points[i]);
    cloud.normals.push_back(prediction.normals[i]);
    cloud.colors.push_back(prediction.colors[i]);
    if (pixel_indices != nullptr) pixel_indices->push_back(i);
  }
  return cloud;
}

AxisAlignedBox ExpandedBounds(std::span<const Vec3> points, double margin) {
  AxisAlignedBox box;
  if (points.empty()) return box;
  box.min = points.front();
  box.max = points.front();
  for (const Vec3& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  const Vec3 grow = (box.max - box.min) * margin;
  box.min -= grow;
  box.max += grow;
  return box;
}

namespace {

Submap FromIndices(const GaussianMap& map, std::vector<std::size_t> indices) {
  Submap sub;
  std::sort(indices.begin(), indices.end());
  sub.gaussian_indices = std::move(indices);
  for (std::size_t i : sub.gaussian_indices) {
    sub.cloud.points.push_back(map[i].mean);
    sub.cloud.normals.push_back(map[i].normal);
    sub.cloud.colors.push_back(map[i].color);
    sub.normal_variance.push_back(map[i].normal.dot(map[i].covariance * map[i].normal));
  }
  return sub;
}

}  // namespace

std::vector<double> PlaneWeights(const Submap& submap, double sigma) {
  std::vector<double> weights(submap.size(), 1.0);
  if (!(sigma > 0.0)) return weights;
  const double s2 = sigma * sigma;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = s2 / (submap.normal_variance[i] + s2);
  }
  return weights;
}

Submap WholeMap(const GaussianMap& map) {
  std::vector<std::size_t> all(map.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return FromIndices(map, std::move(all));
}

Submap SelectSubmap(const GaussianMap& map, std::span<const Vec3> reference_points,
                    double margin) {
  if (reference_points.empty()) throw Error("select_submap: no reference points");
  const AxisAlignedBox box = ExpandedBounds(reference_points, margin);
  const double v = map.voxel_size();
  std::vector<std::size_t> indices;
  for (const VoxelKey& key : map.OccupiedCells()) {
    const Vec3 lo(key.x * v, key.y * v, key.z * v);
    const Vec3 hi = lo + Vec3::Constant(v);
    if ((hi.array() < box.min.array()).any() || (lo.array() > box.max.array()).any()) {
      continue;
    }
    for (std::size_t i : map.Cell(key)) indices.push_back(i);
  }
  if (indices.empty()) {
    spdlog::warn("select_submap: bounding box holds no Gaussians, using the whole map");
    Submap whole = WholeMap(map);
    whole.fallback = true;
    return whole;
  }
  return FromIndices(map, std::move(indices));
}

CoarseRegistration TransferCoarseRegistration(const Prediction& current,
                                              const Prediction& shared_new,
                                              const Prediction& shared_old,
                                              const Config& config) {
  if (shared_new.frame_id != shared_old.frame_id) {
    throw RegistrationError("transfer registration: shared predictions of different frames");
  }
  if (shared_new.PixelCount() != shared_old.PixelCount()) {
    throw RegistrationError("transfer registration: shared predictions are not pixel-aligned");
  }
  const IcpOptions options = IcpOptions::FromConfig(config);

  const PointCloud source = SampleCloud(current, config.icp_source_stride);
  std::vector<std::size_t> target_pixels;
  const PointCloud target = SampleCloud(shared_new, 1, &target_pixels);
  const IcpResult icp = IcpPointToPlane(source.points, target, RigidPose::Identity(), options);

  std::vector<Vec3> from;
  std::vector<Vec3> to;
  std::vector<Vec3> to_normals;
  std::vector<Vec3> moved_source;
  std::vector<double> weights;
  for (std::size_t p = 0; p < icp.correspondences.size(); ++p) {
    const auto [i, j] = icp.correspondences.pairs[p];
    const std::size_t pixel = target_pixels[j];
    if (!shared_old.valid[pixel]) continue;
    from.push_back(shared_new.points[pixel]);
    to.push_back(shared_old.points[pixel]);
    to_normals.push_back(shared_old.normals[pixel]);
    moved_source.push_back(icp.pose * source.points[i]);
    weights.push_back(config.coarse_use_pair_weights ? icp.correspondences.weights[p] : 1.0);
  }
  if (from.size() < options.min_pairs) {
    std::ostringstream ss;
    ss << "transfer registration: only " << from.size() << " composed pairs";
    throw RegistrationError(ss.str());
  }

  CoarseRegistration out;
  out.icp_pose = icp.pose;
  out.drift = FitSimilarity(from, to, weights, false).pose;
  out.pose = out.drift * out.icp_pose;
  out.composed_pairs = from.size();
  double sq = 0.0;
  for (std::size_t p = 0; p < from.size(); ++p) {
    const double r = (out.drift * moved_source[p] - to[p]).dot(to_normals[p]);
    sq += r * r;
  }
  out.residual = std::sqrt(sq / static_cast<double>(from.size()));
  return out;
}

LocalizationResult Localize(const Prediction& current, const Prediction& shared_new,
                            const Prediction& shared_old, const GaussianMap& map,
                            const Config& config) {
  LocalizationResult out;
  out.coarse = TransferCoarseRegistration(current, shared_new, shared_old, config);

  std::vector<Vec3> reference;
  reference.reserve(shared_old.valid.size());
  for (std::size_t i = 0; i < shared_old.valid.size(); ++i) {
    if (shared_old.valid[i]) reference.push_back(shared_old.points[i]);
  }
  out.submap = SelectSubmap(map, reference, config.submap_margin);

  const PointCloud source = SampleCloud(current, config.icp_source_stride);
  out.refinement = IcpColored(source, out.submap.cloud, out.coarse.pose,
                              IcpOptions::FromConfig(config),
                              PlaneWeights(out.submap, config.icp_plane_sigma));
  out.world_from_prediction = out.refinement.pose;
  out.aligned = current.Transformed(out.world_from_prediction);
  out.camera_pose = out.aligned.pose;
  return out;
}

}  // namespace gaussfuse
