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

#include "gaussfuse/icp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "gaussfuse/kdtree.hpp"

namespace gaussfuse {

SimilarityFit FitSimilarity(std::span<const Vec3> src, std::span<const Vec3> dst,
                            std::span<const double> weights, bool with_scale) {
  const std::size_t n = src.size();
  if (n == 0 || dst.size() != n || (!weights.empty() && weights.size() != n)) {
    throw Error("fit_similarity: mismatched or empty inputs");
  }
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double total = 0.0;
  Vec3 mu_src = Vec3::Zero();
  Vec3 mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    total += weight(i);
    mu_src += weight(i) * src[i];
    mu_dst += weight(i) * dst[i];
  }
  if (!(total > 0.0)) throw Error("fit_similarity: weights sum to zero");
  mu_src /= total;
  mu_dst /= total;

  Mat3 cov = Mat3::Zero();
  double var_src = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = src[i] - mu_src;
    cov += weight(i) * (dst[i] - mu_dst) * a.transpose();
    var_src += weight(i) * a.squaredNorm();
  }
  cov /= total;
  var_src /= total;

  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d[2] = -1.0;

  SimilarityFit fit;
  fit.pose.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  fit.scale = (with_scale && var_src > 0.0)
                  ? svd.singularValues().dot(d) / var_src
                  : 1.0;
  fit.pose.translation = mu_dst - fit.scale * fit.pose.rotation * mu_src;

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 r = fit.scale * (fit.pose.rotation * src[i]) + fit.pose.translation - dst[i];
    sq += weight(i) * r.squaredNorm();
  }
  fit.rmse = std::sqrt(sq / total);
  return fit;
}

IcpOptions IcpOptions::FromConfig(const Config& config) {
  IcpOptions o;
  o.max_iterations = config.icp_max_iterations;
  o.tolerance = config.icp_tolerance;
  o.gate_factor = config.icp_gate_factor;
  o.geometric_weight = config.colored_icp_geometric_weight;
  o.gradient_neighbors = config.color_gradient_neighbors;
  o.min_normal_cos = config.icp_min_normal_cos;
  o.robust_k = config.icp_robust_k;
  o.robust_scale_min = config.icp_robust_scale_min;
  o.robust_color_scale_min = config.icp_robust_color_scale_min;
  return o;
}

namespace {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

double Intensity(const Vec3& rgb) { return rgb.sum() / 3.0; }

// Minimal-norm solution of the normal equations; directions the data does
// not constrain (e.g. sliding along a plane) get no update.
Vec6 SolvePseudoInverse(const Mat6& jtj, const Vec6& jtr) {
  Eigen::SelfAdjointEigenSolver<Mat6> solver(jtj);
  const Vec6& values = solver.eigenvalues();
  const double cutoff = std::max(values.maxCoeff(), 0.0) * 1e-10;
  Vec6 out = Vec6::Zero();
  for (int i = 0; i < 6; ++i) {
    if (values[i] > cutoff && values[i] > 0.0) {
      const auto v = solver.eigenvectors().col(i);
      out += v * (v.dot(jtr) / values[i]);
    }
  }
  return out;
}

RigidPose ExpIncrement(const Vec6& x) {
  const Vec3 omega = x.head<3>();
  const double angle = omega.norm();
  RigidPose inc;
  if (angle > 0.0) inc.rotation = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  inc.translation = x.tail<3>();
  return inc;
}

double Median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

struct Pairing {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
};

// Nearest-neighbor pairs surviving the adaptive distance gate and, when
// source normals are given, the normal-compatibility test.
Pairing Associate(std::span<const Vec3> source, std::span<const Vec3> source_normals,
                  const PointCloud& target, const RigidPose& pose, const KdTree& tree,
                  const IcpOptions& options, std::vector<Vec3>& moved) {
  const std::size_t n = source.size();
  moved.resize(n);
  std::vector<std::size_t> nn(n);
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    moved[i] = pose * source[i];
    const Neighbor nb = tree.Nearest(moved[i]);
    nn[i] = nb.index;
    dist[i] = std::sqrt(nb.distance_sq);
  }
  const double gate = options.gate_factor * Median(dist);
  const bool check_normals = !source_normals.empty() && options.min_normal_cos > -1.0;
  Pairing out;
  out.source.reserve(n);
  out.target.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Predicted normals may carry either sign.
    if (check_normals && std::abs((pose.rotation * source_normals[i]).dot(target.normals[nn[i]])) <
                             options.min_normal_cos) {
      continue;
    }
    if (dist[i] <= gate) {
      out.source.push_back(i);
      out.target.push_back(nn[i]);
    }
  }
  return out;
}

// Tukey biweights of |residuals| scaled by their MAD with a floor; all ones
// when k is 0.
std::vector<double> TukeyWeights(std::vector<double> residuals, double k, double scale_min) {
  std::vector<double> weights(residuals.size(), 1.0);
  if (!(k > 0.0)) return weights;
  for (double& r : residuals) r = std::abs(r);
  const double c = k * std::max(1.4826 * Median(residuals), scale_min);
  for (std::size_t p = 0; p < residuals.size(); ++p) {
    const double u = residuals[p] / c;
    weights[p] = u < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
  }
  return weights;
}

// Shared Gauss-Newton loop. The photometric term is active when
// `source_intensity` is non-empty.
IcpResult RunIcp(std::span<const Vec3> source, std::span<const Vec3> source_normals,
                 std::span<const double> source_intensity,
                 const PointCloud& target, std::span<const double> target_intensity,
                 std::span<const Vec3> gradients, std::span<const double> target_weights,
                 const RigidPose& init, const IcpOptions& options) {
  if (source.empty() || target.empty()) throw RegistrationError("icp: empty point cloud");
  if (target.normals.size() != target.size()) {
    throw RegistrationError("icp: target normals missing");
  }
  if (!target_weights.empty() && target_weights.size() != target.size()) {
    throw RegistrationError("icp: one weight per target point required");
  }
  auto weight_of = [&](std::size_t j) { return target_weights.empty() ? 1.0 : target_weights[j]; };
  const bool colored = !source_intensity.empty();
  const double wg = colored ? options.geometric_weight : 1.0;
  const double wc = colored ? 1.0 - options.geometric_weight : 0.0;

  const KdTree tree(target.points);
  IcpResult result;
  result.pose = init;
  std::vector<Vec3> moved;

  auto check_pairs = [&](const Pairing& pairing) {
    if (pairing.source.size() < options.min_pairs) {
      std::ostringstream ss;
      ss << "icp: only " << pairing.source.size() << " correspondences survived the gate (need "
         << options.min_pairs << ")";
      throw RegistrationError(ss.str());
    }
  };

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Pairing pairing =
        Associate(source, source_normals, target, result.pose, tree, options, moved);
    check_pairs(pairing);

    const std::size_t count = pairing.source.size();
    std::vector<double> rg(count), rc(count, 0.0);
    for (std::size_t p = 0; p < count; ++p) {
      const std::size_t i = pairing.source[p];
      const std::size_t j = pairing.target[p];
      const Vec3& n = target.normals[j];
      rg[p] = (moved[i] - target.points[j]).dot(n);
      if (colored) {
        const Vec3 u = moved[i] - n * rg[p];  // projection onto the tangent plane
        rc[p] = target_intensity[j] + gradients[j].dot(u - target.points[j]) -
                source_intensity[i];
      }
    }
    const std::vector<double> robust_g =
        TukeyWeights(rg, options.robust_k, options.robust_scale_min);
    const std::vector<double> robust_c =
        colored ? TukeyWeights(rc, options.robust_k, options.robust_color_scale_min)
                : std::vector<double>();

    Mat6 jtj = Mat6::Zero();
    Vec6 jtr = Vec6::Zero();
    double sq = 0.0;
    double weight_sum = 0.0;
    for (std::size_t p = 0; p < count; ++p) {
      const std::size_t i = pairing.source[p];
      const std::size_t j = pairing.target[p];
      const Vec3& v = moved[i];
      const Vec3& n = target.normals[j];
      const double w = weight_of(j);
      sq += w * robust_g[p] * rg[p] * rg[p];
      weight_sum += w * robust_g[p];
      Vec6 jg;
      jg << v.cross(n), n;
      jtj += w * robust_g[p] * wg * jg * jg.transpose();
      jtr += w * robust_g[p] * wg * jg * rg[p];
      if (colored) {
        const Vec3& d = gradients[j];
        const Vec3 m = d - d.dot(n) * n;
        Vec6 jc;
        jc << v.cross(m), m;
        jtj += w * robust_c[p] * wc * jc * jc.transpose();
        jtr += w * robust_c[p] * wc * jc * rc[p];
      }
    }
    result.residual_history.push_back(weight_sum > 0.0 ? sq / weight_sum : 0.0);

    const Vec6 x = -SolvePseudoInverse(jtj, jtr);
    if (!x.allFinite()) throw RegistrationError("icp: non-finite update");
    result.pose = ExpIncrement(x) * result.pose;
    result.pose.Orthonormalize();
    result.iterations = iter + 1;
    if (x.norm() < options.tolerance) {
      result.converged = true;
      break;
    }
  }

  const Pairing final_pairs =
      Associate(source, source_normals, target, result.pose, tree, options, moved);
  check_pairs(final_pairs);
  double sq = 0.0;
  double weight_sum = 0.0;
  result.correspondences.pairs.reserve(final_pairs.source.size());
  for (std::size_t p = 0; p < final_pairs.source.size(); ++p) {
    const std::size_t i = final_pairs.source[p];
    const std::size_t j = final_pairs.target[p];
    const double r = (moved[i] - target.points[j]).dot(target.normals[j]);
    const double w = weight_of(j);
    sq += w * r * r;
    weight_sum += w;
    result.correspondences.pairs.emplace_back(i, j);
    result.correspondences.weights.push_back(w);
  }
  result.rmse = weight_sum > 0.0 ? std::sqrt(sq / weight_sum) : 0.0;
  return result;
}

}  // namespace

std::vector<Vec3> ComputeColorGradients(const PointCloud& target, int neighbors) {
  const std::size_t n = target.size();
  std::vector<Vec3> gradients(n, Vec3::Zero());
  if (n < 3 || target.colors.size() != n || target.normals.size() != n) return gradients;
  const KdTree tree(target.points);
  std::vector<Neighbor> knn;
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(neighbors) + 1, n);
  for (std::size_t i = 0; i < n; ++i) {
    tree.Knn(target.points[i], k, knn);
    const Vec3& p = target.points[i];
    const Vec3& normal = target.normals[i];
    const double ci = Intensity(target.colors[i]);
    Mat3 ata = Mat3::Zero();
    Vec3 atb = Vec3::Zero();
    std::size_t used = 0;
    for (const Neighbor& nb : knn) {
      if (nb.index == i) continue;
      const Vec3& q = target.points[nb.index];
      const Vec3 proj = q - normal * (q - p).dot(normal);
      const Vec3 a = proj - p;
      const double b = Intensity(target.colors[nb.index]) - ci;
      ata += a * a.transpose();
      atb += a * b;
      ++used;
    }
    if (used < 2) continue;
    // Keep the gradient in the tangent plane.
    const double w = static_cast<double>(used);
    ata += w * normal * normal.transpose();
    const Eigen::LDLT<Mat3> ldlt(ata);
    if (ldlt.info() != Eigen::Success) continue;
    const Vec3 g = ldlt.solve(atb);
    if (g.allFinite()) gradients[i] = g - g.dot(normal) * normal;
  }
  return gradients;
}

IcpResult IcpPointToPlane(std::span<const Vec3> source, const PointCloud& target,
                          const RigidPose& init, const IcpOptions& options,
                          std::span<const double> target_weights) {
  return RunIcp(source, {}, {}, target, {}, {}, target_weights, init, options);
}

IcpResult IcpColored(const PointCloud& source, const PointCloud& target,
                     const RigidPose& init, const IcpOptions& options,
                     std::span<const double> target_weights) {
  if (source.colors.size() != source.size() || target.colors.size() != target.size()) {
    throw RegistrationError("colored icp: colors missing");
  }
  std::vector<double> src_i(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) src_i[i] = Intensity(source.colors[i]);
  std::vector<double> dst_i(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) dst_i[i] = Intensity(target.colors[i]);
  const std::vector<Vec3> gradients = ComputeColorGradients(target, options.gradient_neighbors);
  if (src_i.empty()) throw RegistrationError("icp: empty point cloud");
  const std::span<const Vec3> normals =
      source.normals.size() == source.size() ? std::span<const Vec3>(source.normals)
                                             : std::span<const Vec3>();
  return RunIcp(source.points, normals, src_i, target, dst_i, gradients, target_weights, init,
                options);
}

}  // namespace gaussfuse
