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

#ifndef GAUSSFUSE_GAUSSIAN_MAP_HPP_
#define GAUSSFUSE_GAUSSIAN_MAP_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct VoxelKey {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  bool operator==(const VoxelKey&) const = default;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    return static_cast<std::size_t>(k.x) * 73856093ULL ^
           static_cast<std::size_t>(k.y) * 19349669ULL ^
           static_cast<std::size_t>(k.z) * 83492791ULL;
  }
};

// Clamps the eigenvalues of a symmetrized covariance to at least `floor`.
// Sets `*degenerate` when any eigenvalue had to be raised.
Mat3 FloorCovariance(const Mat3& covariance, double floor,
                     bool* degenerate = nullptr);

// Non-squared Mahalanobis distance of `delta` under `covariance`.
double MahalanobisDistance(const Vec3& delta, const Mat3& covariance);

// Gaussian mixture plus a voxel hash over the component means. Every
// Gaussian lives in exactly one cell, the cell containing its mean.
class GaussianMap {
 public:
  explicit GaussianMap(double voxel_size = 0.2, int feature_dim = 16);

  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  double voxel_size() const { return voxel_size_; }
  int feature_dim() const { return feature_dim_; }

  const Gaussian& operator[](std::size_t i) const { return gaussians_[i]; }
  std::span<const Gaussian> gaussians() const { return gaussians_; }

  std::size_t Add(Gaussian gaussian);
  // Replaces Gaussian `i` and moves it to its new cell if the mean changed.
  void Update(std::size_t i, Gaussian gaussian);

  VoxelKey KeyOf(const Vec3& point) const;
  const VoxelKey& CellOf(std::size_t i) const { return cell_of_[i]; }
  // Gaussians in the cell containing `point`; empty when the cell is absent.
  std::span<const std::size_t> Lookup(const Vec3& point) const;
  std::span<const std::size_t> Cell(const VoxelKey& key) const;
  // Occupied cells in lexicographic order.
  std::vector<VoxelKey> OccupiedCells() const;
  std::size_t CellCount() const { return cells_.size(); }

 private:
  void Insert(std::size_t i);
  void Remove(std::size_t i);

  double voxel_size_;
  int feature_dim_;
  std::vector<Gaussian> gaussians_;
  std::vector<VoxelKey> cell_of_;
  std::unordered_map<VoxelKey, std::vector<std::size_t>, VoxelKeyHash> cells_;
};

// Lists every violated invariant of the map's Gaussians and of its index.
std::vector<std::string> Validate(const GaussianMap& map,
                                  double covariance_floor = 1e-8);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_GAUSSIAN_MAP_HPP_
