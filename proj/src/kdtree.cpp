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

#include "gaussfuse/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace gaussfuse {
namespace {

constexpr std::uint32_t kLeafSize = 12;

bool Closer(const Neighbor& a, const Neighbor& b) {
  return a.distance_sq < b.distance_sq ||
         (a.distance_sq == b.distance_sq && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points)
    : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    Build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::Build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const std::int32_t left = Build(begin, mid);
  const std::int32_t right = Build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::Search(std::int32_t node_id, const Vec3& query, std::size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const Neighbor cand{idx, (points_[idx] - query).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), Closer);
      } else if (Closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), Closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), Closer);
      }
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  Search(near, query, k, heap);
  // Equal distances must still be visited for the index tie-break.
  if (heap.size() < k || diff * diff <= heap.front().distance_sq) {
    Search(far, query, k, heap);
  }
}

Neighbor KdTree::Nearest(const Vec3& query) const {
  std::vector<Neighbor> heap;
  heap.reserve(1);
  Search(0, query, 1, heap);
  return heap.front();
}

void KdTree::Knn(const Vec3& query, std::size_t k, std::vector<Neighbor>& out) const {
  out.clear();
  if (points_.empty() || k == 0) return;
  out.reserve(k);
  Search(0, query, k, out);
  std::sort_heap(out.begin(), out.end(), Closer);
}

}  // namespace gaussfuse
