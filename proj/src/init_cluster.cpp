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

#include "gaussfuse/init_cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gaussfuse/kdtree.hpp"

namespace gaussfuse {

AttributedPoints AttributedPoints::FromPrediction(const Prediction& prediction) {
  const std::vector<std::size_t> idx = prediction.ValidIndices();
  return FromPrediction(prediction, idx);
}

AttributedPoints AttributedPoints::FromPrediction(
    const Prediction& prediction, std::span<const std::size_t> pixel_indices) {
  AttributedPoints out;
  const std::size_t n = pixel_indices.size();
  out.points.reserve(n);
  out.normals.reserve(n);
  out.colors.reserve(n);
  out.features.resize(prediction.FeatureDim(), static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (std::size_t p : pixel_indices) {
    out.points.push_back(prediction.points[p]);
    out.normals.push_back(prediction.normals[p]);
    out.colors.push_back(prediction.colors[p]);
    out.features.col(col++) = prediction.features.col(static_cast<Eigen::Index>(p));
  }
  return out;
}

void AttributedPoints::Append(const AttributedPoints& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  points.insert(points.end(), other.points.begin(), other.points.end());
  normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  Eigen::MatrixXd merged(features.rows(), features.cols() + other.features.cols());
  merged << features, other.features;
  features = std::move(merged);
}

AttributedPoints AttributedPoints::Subset(std::span<const std::size_t> indices) const {
  AttributedPoints out;
  out.points.reserve(indices.size());
  out.normals.reserve(indices.size());
  out.colors.reserve(indices.size());
  out.features.resize(features.rows(), static_cast<Eigen::Index>(indices.size()));
  Eigen::Index col = 0;
  for (std::size_t i : indices) {
    out.points.push_back(points[i]);
    out.normals.push_back(normals[i]);
    out.colors.push_back(colors[i]);
    out.features.col(col++) = features.col(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::size_t ChooseK(std::size_t total_points, std::size_t frames, double lambda) {
  if (frames == 0 || !(lambda > 0.0)) return 1;
  const double k = std::floor(static_cast<double>(total_points) /
                              (lambda * static_cast<double>(frames)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

namespace {

std::vector<Vec3> SeedPlusPlus(std::span<const Vec3> points, std::size_t k,
                               std::mt19937_64& rng) {
  const std::size_t n = points.size();
  std::vector<Vec3> centroids;
  centroids.reserve(k);
  std::vector<char> used(n, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  centroids.push_back(points[first]);
  used[first] = 1;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (points[i] - centroids[0]).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      if (chosen == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a centroid: take unused indices in order.
      for (std::size_t i = 0; i < n; ++i) {
        if (!used[i]) {
          chosen = i;
          break;
        }
      }
    }
    used[chosen] = 1;
    centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (points[i] - points[chosen]).squaredNorm());
    }
  }
  return centroids;
}

}  // namespace

ClusterResult KMeans(std::span<const Vec3> points, std::size_t k, std::uint64_t seed,
                     int max_iterations, double tolerance) {
  const std::size_t n = points.size();
  if (k == 0) throw Error("kmeans: k must be positive");
  if (n < k) throw Error("kmeans: fewer points than clusters");

  std::mt19937_64 rng(seed);
  ClusterResult result;
  result.centroids = SeedPlusPlus(points, k, rng);
  result.assignment.assign(n, 0);
  std::vector<double> dist2(n, 0.0);

  for (int iter = 0; iter < max_iterations; ++iter) {
    const KdTree tree(result.centroids);
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Neighbor nb = tree.Nearest(points[i]);
      result.assignment[i] = static_cast<int>(nb.index);
      dist2[i] = nb.distance_sq;
      objective += nb.distance_sq;
    }

    std::vector<Vec3> sums(k, Vec3::Zero());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[result.assignment[i]] += points[i];
      ++counts[result.assignment[i]];
    }
    // Re-seed empty clusters from the worst-explained points.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[result.assignment[i]] > 1 && dist2[i] > far_d) {
          far_d = dist2[i];
          far = i;
        }
      }
      const int old = result.assignment[far];
      sums[old] -= points[far];
      --counts[old];
      objective -= dist2[far];
      result.assignment[far] = static_cast<int>(c);
      sums[c] = points[far];
      counts[c] = 1;
      dist2[far] = 0.0;
    }
    result.objective_history.push_back(objective);

    double motion = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const Vec3 updated = sums[c] / static_cast<double>(counts[c]);
      motion = std::max(motion, (updated - result.centroids[c]).norm());
      result.centroids[c] = updated;
    }
    result.iterations = iter + 1;
    if (motion < tolerance) break;
  }
  return result;
}

NeighborhoodGaussian GaussianFromNeighborhood(const Vec3& center,
                                              const AttributedPoints& neighbors,
                                              const NeighborhoodOptions& options) {
  const std::size_t m = neighbors.size();
  if (m == 0) throw Error("gaussian_from_neighborhood: empty neighborhood");

  NeighborhoodGaussian out;
  Gaussian& g = out.gaussian;
  g.mean = center;
  g.blend_state = 1.0;

  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : neighbors.points) mean += p;
  mean /= static_cast<double>(m);
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : neighbors.points) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(std::max<std::size_t>(m - 1, 1));
  g.covariance = FloorCovariance(cov, options.covariance_floor, &out.degenerate);

  // The neighbor nearest the center fixes the normal orientation.
  std::size_t nearest = 0;
  double nearest_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    const double d = (neighbors.points[i] - center).squaredNorm();
    if (d < nearest_d) {
      nearest_d = d;
      nearest = i;
    }
  }
  const Vec3 reference_normal = neighbors.normals[nearest];

  const Eigen::LDLT<Mat3> ldlt(g.covariance);
  out.weights.resize(m);
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3 delta = center - neighbors.points[i];
    const double d2 = std::max(delta.dot(ldlt.solve(delta)), 0.0);
    const double d = options.squared_distance ? d2 : std::sqrt(d2);
    out.weights[i] = std::exp(-0.5 * d);
    weight_sum += out.weights[i];
  }
  if (!(weight_sum > 0.0)) {
    std::fill(out.weights.begin(), out.weights.end(), 1.0 / static_cast<double>(m));
  } else {
    for (double& w : out.weights) w /= weight_sum;
  }

  Vec3 normal_sum = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  VecX feature_mean = VecX::Zero(neighbors.features.rows());
  for (std::size_t i = 0; i < m; ++i) {
    const Vec3& n = neighbors.normals[i];
    normal_sum += (n.dot(reference_normal) < 0.0 ? -n : n) * out.weights[i];
    color += neighbors.colors[i] * out.weights[i];
    feature_mean += neighbors.features.col(static_cast<Eigen::Index>(i)) * out.weights[i];
  }
  const double normal_norm = normal_sum.norm();
  g.normal = normal_norm > 1e-12 ? Vec3(normal_sum / normal_norm)
                                 : reference_normal.normalized();
  g.color = color.cwiseMax(0.0).cwiseMin(1.0);

  out.feature_source = nearest;
  if (neighbors.features.rows() > 0 && feature_mean.norm() > 0.0) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      const double score =
          neighbors.features.col(static_cast<Eigen::Index>(i)).dot(feature_mean);
      if (score > best) {
        best = score;
        out.feature_source = i;
      }
    }
  }
  g.feature = neighbors.features.col(static_cast<Eigen::Index>(out.feature_source));
  return out;
}

std::vector<Gaussian> BuildGaussians(const AttributedPoints& points, std::size_t frames,
                                     const Config& config, std::uint64_t seed,
                                     BuildStats* stats) {
  std::vector<Gaussian> out;
  if (points.size() == 0) return out;
  const std::size_t k = std::min(ChooseK(points.size(), frames, config.lambda), points.size());
  const ClusterResult clusters = KMeans(points.points, k, seed, config.kmeans_max_iterations,
                                        config.kmeans_tolerance);
  const KdTree tree(points.points);
  const std::size_t m =
      std::min<std::size_t>(static_cast<std::size_t>(config.covariance_neighbors), points.size());
  const NeighborhoodOptions options{config.covariance_floor, config.kernel_squared_distance};

  BuildStats local;
  local.clusters = k;
  out.reserve(k);
  std::vector<Neighbor> knn;
  std::vector<std::size_t> idx;
  for (const Vec3& centroid : clusters.centroids) {
    tree.Knn(centroid, m, knn);
    idx.clear();
    for (const Neighbor& nb : knn) idx.push_back(nb.index);
    NeighborhoodGaussian built =
        GaussianFromNeighborhood(centroid, points.Subset(idx), options);
    local.degenerate += built.degenerate ? 1 : 0;
    out.push_back(std::move(built.gaussian));
  }
  if (stats != nullptr) *stats = local;
  return out;
}

GaussianMap InitializeMap(std::span<const Prediction> predictions, const Config& config,
                          BuildStats* stats) {
  if (predictions.empty()) throw Error("initialize_map: no predictions");
  AttributedPoints all;
  for (const Prediction& p : predictions) all.Append(AttributedPoints::FromPrediction(p));
  if (all.size() == 0) throw Error("initialize_map: predictions contain no valid points");

  GaussianMap map(config.voxel_size, static_cast<int>(all.features.rows()));
  for (Gaussian& g : BuildGaussians(all, predictions.size(), config, config.seed, stats)) {
    map.Add(std::move(g));
  }
  return map;
}

}  // namespace gaussfuse
