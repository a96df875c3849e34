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

#include "gaussfuse/gaussian_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace gaussfuse {

Mat3 FloorCovariance(const Mat3& covariance, double floor, bool* degenerate) {
  const Mat3 sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Mat3> solver(sym);
  Vec3 values = solver.eigenvalues();
  bool raised = false;
  for (int i = 0; i < 3; ++i) {
    if (!(values[i] >= floor)) {
      values[i] = floor;
      raised = true;
    }
  }
  if (degenerate != nullptr) *degenerate = raised;
  if (!raised) return sym;
  const Mat3& v = solver.eigenvectors();
  Mat3 out = v * values.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

double MahalanobisDistance(const Vec3& delta, const Mat3& covariance) {
  const double d2 = delta.dot(covariance.ldlt().solve(delta));
  return std::sqrt(std::max(d2, 0.0));
}

GaussianMap::GaussianMap(double voxel_size, int feature_dim)
    : voxel_size_(voxel_size), feature_dim_(feature_dim) {
  if (!(voxel_size > 0.0)) throw Error("GaussianMap: voxel size must be positive");
  if (feature_dim < 0) throw Error("GaussianMap: negative feature dimension");
}

VoxelKey GaussianMap::KeyOf(const Vec3& point) const {
  return {static_cast<std::int32_t>(std::floor(point.x() / voxel_size_)),
          static_cast<std::int32_t>(std::floor(point.y() / voxel_size_)),
          static_cast<std::int32_t>(std::floor(point.z() / voxel_size_))};
}

std::size_t GaussianMap::Add(Gaussian gaussian) {
  if (gaussian.feature.size() != feature_dim_) {
    throw Error("GaussianMap: feature dimension mismatch");
  }
  const std::size_t i = gaussians_.size();
  gaussians_.push_back(std::move(gaussian));
  cell_of_.push_back({});
  Insert(i);
  return i;
}

void GaussianMap::Update(std::size_t i, Gaussian gaussian) {
  if (gaussian.feature.size() != feature_dim_) {
    throw Error("GaussianMap: feature dimension mismatch");
  }
  const VoxelKey key = KeyOf(gaussian.mean);
  const bool moved = !(key == cell_of_[i]);
  if (moved) Remove(i);
  gaussians_[i] = std::move(gaussian);
  if (moved) Insert(i);
}

void GaussianMap::Insert(std::size_t i) {
  const VoxelKey key = KeyOf(gaussians_[i].mean);
  cell_of_[i] = key;
  auto& bucket = cells_[key];
  bucket.insert(std::lower_bound(bucket.begin(), bucket.end(), i), i);
}

void GaussianMap::Remove(std::size_t i) {
  auto it = cells_.find(cell_of_[i]);
  if (it == cells_.end()) return;
  auto& bucket = it->second;
  bucket.erase(std::remove(bucket.begin(), bucket.end(), i), bucket.end());
  if (bucket.empty()) cells_.erase(it);
}

std::span<const std::size_t> GaussianMap::Cell(const VoxelKey& key) const {
  auto it = cells_.find(key);
  if (it == cells_.end()) return {};
  return it->second;
}

std::span<const std::size_t> GaussianMap::Lookup(const Vec3& point) const {
  return Cell(KeyOf(point));
}

std::vector<VoxelKey> GaussianMap::OccupiedCells() const {
  std::vector<VoxelKey> keys;
  keys.reserve(cells_.size());
  for (const auto& [key, bucket] : cells_) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<std::string> Validate(const GaussianMap& map, double covariance_floor) {
  std::vector<std::string> out;
  auto report = [&out](std::size_t i, const std::string& what) {
    std::ostringstream ss;
    ss << "gaussian " << i << ": " << what;
    out.push_back(ss.str());
  };
  // Eigenvalues come back from a solver; allow its rounding.
  const double floor_tol = covariance_floor * (1.0 - 1e-6);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const Gaussian& g = map[i];
    if (!g.mean.allFinite()) report(i, "mean not finite");
    const Mat3& s = g.covariance;
    if (!s.allFinite()) {
      report(i, "covariance not finite");
    } else {
      if ((s - s.transpose()).norm() > 1e-12) report(i, "covariance not symmetric");
      Eigen::SelfAdjointEigenSolver<Mat3> solver(0.5 * (s + s.transpose()),
                                                 Eigen::EigenvaluesOnly);
      if (solver.eigenvalues().minCoeff() < floor_tol) {
        report(i, "covariance eigenvalue below floor");
      }
    }
    if (std::abs(g.normal.norm() - 1.0) > 1e-9) report(i, "normal not unit");
    if (g.feature.size() != map.feature_dim()) {
      report(i, "feature dimension mismatch");
    } else if (g.feature.size() > 0 && std::abs(g.feature.norm() - 1.0) > 1e-9) {
      report(i, "feature not unit");
    }
    if ((g.color.array() < 0.0).any() || (g.color.array() > 1.0).any() ||
        !g.color.allFinite()) {
      report(i, "color outside [0,1]");
    }
    if (!(g.blend_state > 0.0 && g.blend_state <= 1.0)) {
      report(i, "blend state outside (0,1]");
    }
    if (!(map.CellOf(i) == map.KeyOf(g.mean))) {
      report(i, "indexed in the wrong voxel");
    } else {
      auto cell = map.Cell(map.CellOf(i));
      if (std::count(cell.begin(), cell.end(), i) != 1) report(i, "missing from voxel index");
    }
  }
  return out;
}

}  // namespace gaussfuse
