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

#ifndef GAUSSFUSE_KDTREE_HPP_
#define GAUSSFUSE_KDTREE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct Neighbor {
  std::size_t index = 0;
  double distance_sq = 0.0;
};

// Static 3D k-d tree. Results are ordered by distance with ties broken by
// the lower point index, so queries are deterministic.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  // Undefined on an empty tree.
  Neighbor Nearest(const Vec3& query) const;
  // Up to k nearest neighbors, closest first.
  void Knn(const Vec3& query, std::size_t k, std::vector<Neighbor>& out) const;
  std::vector<Neighbor> Knn(const Vec3& query, std::size_t k) const {
    std::vector<Neighbor> out;
    Knn(query, k, out);
    return out;
  }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t Build(std::uint32_t begin, std::uint32_t end);
  void Search(std::int32_t node, const Vec3& query, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace gaussfuse

#endif  // GAUSSFUSE_KDTREE_HPP_
