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

#include "gaussfuse/em_mapping.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "gaussfuse/kdtree.hpp"

namespace gaussfuse {
namespace {

// Inverse covariance and log-determinant of one map Gaussian.
struct Precision {
  Mat3 inverse;
  double log_det = 0.0;
};

Precision MakePrecision(const Gaussian& g) {
  Precision p;
  const Eigen::LDLT<Mat3> ldlt(g.covariance);
  p.inverse = ldlt.solve(Mat3::Identity());
  p.log_det = ldlt.vectorD().array().log().sum();
  return p;
}

double Mahalanobis(const Vec3& delta, const Precision& p) {
  return std::sqrt(std::max(delta.dot(p.inverse * delta), 0.0));
}

}  // namespace

GateResult GatePoints(const Prediction& aligned, const Submap& submap, const GaussianMap& map,
                      const Config& config) {
  GateResult out;
  const std::vector<std::size_t> valid = aligned.ValidIndices();
  if (submap.size() == 0) {
    out.rejected = valid;
    return out;
  }
  out.k = std::min<std::size_t>(static_cast<std::size_t>(config.k_neighbors), submap.size());
  const KdTree tree(submap.cloud.points);
  std::vector<Precision> precision;
  precision.reserve(submap.size());
  for (std::size_t idx : submap.gaussian_indices) precision.push_back(MakePrecision(map[idx]));

  std::vector<Neighbor> knn;
  for (std::size_t pixel : valid) {
    const Vec3& x = aligned.points[pixel];
    const Vec3& n = aligned.normals[pixel];
    tree.Knn(x, out.k, knn);
    double normal_sum = 0.0;
    double min_d = std::numeric_limits<double>::infinity();
    for (const Neighbor& nb : knn) {
      const Gaussian& g = map[submap.gaussian_indices[nb.index]];
      normal_sum += g.normal.dot(n);
      min_d = std::min(min_d, Mahalanobis(x - g.mean, precision[nb.index]));
    }
    const bool pass = normal_sum / static_cast<double>(knn.size()) >= config.tau_normal &&
                      min_d <= config.tau_sigma;
    if (pass) {
      out.passing.push_back(pixel);
      for (const Neighbor& nb : knn) out.neighbors.push_back(submap.gaussian_indices[nb.index]);
    } else {
      out.rejected.push_back(pixel);
    }
  }
  return out;
}

double LogLikelihood(double d_sigma, double log_det, double d_normal, double d_cos,
                     double kappa_normal, double kappa_feature) {
  return -0.5 * d_sigma * d_sigma - log_det + kappa_normal * (d_normal - 1.0) +
         kappa_feature * (d_cos - 1.0);
}

GatedAssignment ComputeResponsibilities(const Prediction& aligned, const GateResult& gate,
                                        const GaussianMap& map, const Config& config) {
  GatedAssignment out;
  const std::size_t k = gate.k;
  out.k = k;
  if (k == 0 || gate.passing.empty()) return out;

  std::map<std::size_t, Precision> cache;
  auto precision_of = [&](std::size_t idx) -> const Precision& {
    auto it = cache.find(idx);
    if (it == cache.end()) it = cache.emplace(idx, MakePrecision(map[idx])).first;
    return it->second;
  };

  const std::size_t n = gate.passing.size();
  out.points.reserve(n);
  std::vector<double> d_sigma(k), d_n(k), d_c(k), p(k), p_det(k);
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t pixel = gate.passing[row];
    const Vec3& x = aligned.points[pixel];
    const Vec3& normal = aligned.normals[pixel];
    const auto feature = aligned.features.col(static_cast<Eigen::Index>(pixel));
    bool finite = true;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t idx = gate.neighbors[row * k + j];
      const Gaussian& g = map[idx];
      const Precision& prec = precision_of(idx);
      d_sigma[j] = Mahalanobis(x - g.mean, prec);
      d_n[j] = g.normal.dot(normal);
      d_c[j] = g.feature.size() == feature.size() && g.feature.size() > 0
                   ? g.feature.dot(feature)
                   : 1.0;
      p_det[j] = -prec.log_det;
      p[j] = LogLikelihood(d_sigma[j], prec.log_det, d_n[j], d_c[j], config.kappa_normal,
                           config.kappa_feature);
      finite = finite && std::isfinite(p[j]);
    }
    if (!finite) {
      out.dropped.push_back(pixel);
      continue;
    }
    const double p_max = *std::max_element(p.begin(), p.end());
    const double det_max = *std::max_element(p_det.begin(), p_det.end());
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(p[j] - p_max);

    out.points.push_back(pixel);
    for (std::size_t j = 0; j < k; ++j) {
      out.neighbors.push_back(gate.neighbors[row * k + j]);
      out.d_sigma.push_back(d_sigma[j]);
      out.d_normal.push_back(d_n[j]);
      out.d_cos.push_back(d_c[j]);
      out.log_likelihood.push_back(p[j]);
      out.responsibilities.push_back(std::exp(p[j] - p_max) / z);
    }
    const double pi = p_max - det_max;
    out.pi.push_back(pi);
    // pi is never positive; the gate bounds how far below the densest
    // neighbor's peak the best explanation may sit.
    out.integrate.push_back(std::abs(pi) <= config.tau_pi ? 1 : 0);
  }
  return out;
}

double IsotropyScore(const Gaussian& gaussian, std::span<const Vec3> points,
                     std::span<const double> responsibilities, double delta_min) {
  double total = 0.0;
  for (double r : responsibilities) total += std::max(r, 0.0);
  if (!(total > 0.0) || points.empty()) return delta_min;

  Eigen::SelfAdjointEigenSolver<Mat3> solver(gaussian.covariance);
  std::array<int, 3> order{0, 1, 2};
  std::array<double, 3> alignment{};
  for (int i = 0; i < 3; ++i) {
    alignment[i] = std::abs(solver.eigenvectors().col(i).dot(gaussian.normal));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return alignment[a] < alignment[b]; });

  double delta = 1.0;
  for (int a = 0; a < 2; ++a) {
    const Vec3 axis = solver.eigenvectors().col(order[a]);
    double plus = 0.0;
    double minus = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r = std::max(responsibilities[i], 0.0) / total;
      const double proj = (points[i] - gaussian.mean).dot(axis);
      if (proj > 0.0) {
        plus += r;
      } else if (proj < 0.0) {
        minus += r;
      } else {
        plus += 0.5 * r;
        minus += 0.5 * r;
      }
    }
    delta = std::min(delta, 2.0 * std::min(plus, minus));
  }
  return std::clamp(delta, delta_min, 1.0);
}

EmUpdateResult EmUpdate(GaussianMap& map, const Prediction& aligned,
                        const GatedAssignment& assignment, const Config& config) {
  EmUpdateResult result;
  const std::size_t k = assignment.k;
  result.leftovers = assignment.dropped;

  // Ordered per-Gaussian scatter keeps the reduction deterministic.
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> support;
  for (std::size_t row = 0; row < assignment.size(); ++row) {
    const std::size_t pixel = assignment.points[row];
    if (!assignment.integrate[row]) {
      result.leftovers.push_back(pixel);
      continue;
    }
    ++result.integrated_points;
    for (std::size_t j = 0; j < k; ++j) {
      support[assignment.neighbors[row * k + j]].emplace_back(
          pixel, assignment.responsibilities[row * k + j]);
    }
  }
  std::sort(result.leftovers.begin(), result.leftovers.end());

  std::vector<Vec3> pts;
  std::vector<double> rs;
  for (const auto& [idx, members] : support) {
    double total = 0.0;
    for (const auto& m : members) total += m.second;
    if (total < config.responsibility_min) continue;
    const Gaussian& old = map[idx];

    Vec3 mean = Vec3::Zero();
    Vec3 color = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    pts.clear();
    rs.clear();
    for (const auto& [pixel, r] : members) {
      const Vec3& x = aligned.points[pixel];
      const Vec3& n = aligned.normals[pixel];
      mean += r * x;
      color += r * aligned.colors[pixel];
      normal += r * (n.dot(old.normal) < 0.0 ? -n : n);
      pts.push_back(x);
      rs.push_back(r);
    }
    mean /= total;
    color /= total;
    Mat3 cov = Mat3::Zero();
    for (const auto& [pixel, r] : members) {
      const Vec3 d = aligned.points[pixel] - mean;
      cov += r * d * d.transpose();
    }
    cov = FloorCovariance(cov / total, config.covariance_floor);
    const double nn = normal.norm();
    normal = nn > 1e-12 ? Vec3(normal / nn) : old.normal;

    const double delta = IsotropyScore(old, pts, rs, config.delta_min);
    const double alpha = NextBlendState(old.blend_state, delta);

    Gaussian g = old;
    g.mean = (1.0 - alpha) * old.mean + alpha * mean;
    g.covariance =
        FloorCovariance((1.0 - alpha) * old.covariance + alpha * cov, config.covariance_floor);
    g.color = ((1.0 - alpha) * old.color + alpha * color).cwiseMax(0.0).cwiseMin(1.0);
    const Vec3 blended = (1.0 - alpha) * old.normal + alpha * normal;
    g.normal = blended.norm() > 1e-12 ? Vec3(blended.normalized()) : old.normal;
    g.blend_state = alpha;
    map.Update(idx, std::move(g));
    ++result.updated;
  }
  return result;
}

}  // namespace gaussfuse
