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

#include "gaussfuse/synthetic_source.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>

namespace gaussfuse {
namespace {

std::uint64_t Mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 MakeRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                        std::uint64_t c = 0) {
  return std::mt19937_64(Mix(Mix(Mix(Mix(seed) ^ a) ^ b) ^ c));
}

enum Stream : std::uint64_t { kFrameStream = 1, kCallStream = 2, kFeatureStream = 3 };

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Sum of three random plane waves per axis; per-axis RMS equals `amplitude`.
class SmoothField {
 public:
  SmoothField() = default;
  SmoothField(double amplitude, double wavelength, std::mt19937_64& rng)
      : amplitude_(amplitude / std::sqrt(1.5)) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (auto& axis : waves_) {
      for (auto& w : axis) {
        Vec3 dir(normal(rng), normal(rng), normal(rng));
        if (dir.norm() < 1e-12) dir = Vec3::UnitX();
        w.k = dir.normalized() * (2.0 * std::numbers::pi / wavelength);
        w.phase = phase(rng);
      }
    }
  }

  Vec3 operator()(const Vec3& p) const {
    if (amplitude_ == 0.0) return Vec3::Zero();
    Vec3 out;
    for (int a = 0; a < 3; ++a) {
      double s = 0.0;
      for (const Wave& w : waves_[a]) s += std::sin(w.k.dot(p) + w.phase);
      out[a] = amplitude_ * s;
    }
    return out;
  }

 private:
  struct Wave {
    Vec3 k = Vec3::Zero();
    double phase = 0.0;
  };
  double amplitude_ = 0.0;
  std::array<std::array<Wave, 3>, 3> waves_{};
};

Mat3 RandomRotation(double sigma_rad, std::mt19937_64& rng) {
  if (sigma_rad <= 0.0) return Mat3::Identity();
  std::normal_distribution<double> normal(0.0, sigma_rad);
  const Vec3 w(normal(rng), normal(rng), normal(rng));
  const double angle = w.norm();
  if (angle < 1e-15) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

}  // namespace

void SyntheticScene::AddBox(const Vec3& min, const Vec3& max, const Vec3& albedo, int label,
                            double checker_size) {
  const Vec3 d = max - min;
  const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
  // Edge order makes u x v point outward.
  const std::array<std::array<Vec3, 3>, 6> faces{{
      {min, ey, ex},            // bottom, -z
      {min + ez, ex, ey},       // top, +z
      {min, ex, ez},            // -y
      {min + ey, ez, ex},       // +y
      {min, ez, ey},            // -x
      {min + ex, ey, ez},       // +x
  }};
  for (const auto& f : faces) patches.push_back({f[0], f[1], f[2], albedo, checker_size, label});
}

void SyntheticScene::AddRoom(const Vec3& min, const Vec3& max, const std::vector<int>& labels,
                             const std::vector<Vec3>& albedos, double checker_size) {
  const Vec3 d = max - min;
  const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
  // Inward-facing floor, ceiling, then walls at -y, +y, -x, +x.
  const std::array<std::array<Vec3, 3>, 6> faces{{
      {min, ex, ey},
      {min + ez, ey, ex},
      {min, ez, ex},
      {min + ey, ex, ez},
      {min, ey, ez},
      {min + ex, ez, ey},
  }};
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const int label = labels.empty() ? 0 : labels[std::min(i, labels.size() - 1)];
    const Vec3 albedo = albedos.empty() ? Vec3::Constant(0.7)
                                        : albedos[std::min(i, albedos.size() - 1)];
    patches.push_back({faces[i][0], faces[i][1], faces[i][2], albedo, checker_size, label});
  }
}

void SyntheticScene::MakeClassFeatures(int classes, int dim, std::uint64_t seed) {
  if (classes > dim) throw Error("synthetic scene: more classes than feature dimensions");
  std::mt19937_64 rng = MakeRng(seed, kFeatureStream);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd random(dim, dim);
  for (int c = 0; c < dim; ++c) {
    for (int r = 0; r < dim; ++r) random(r, c) = normal(rng);
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(random).householderQ();
  class_features = q.leftCols(classes);
  for (int c = 0; c < classes; ++c) class_features.col(c).normalize();
}

RigidPose LookAt(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitY());
  x.normalize();
  const Vec3 y = z.cross(x);
  RigidPose pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = y;
  pose.rotation.col(2) = z;
  pose.translation = eye;
  return pose;
}

std::vector<RigidPose> OrbitTrajectory(const Vec3& center, double radius, double height,
                                       const Vec3& target, double start_deg, double sweep_deg,
                                       int frames) {
  std::vector<RigidPose> out;
  out.reserve(static_cast<std::size_t>(std::max(frames, 0)));
  for (int i = 0; i < frames; ++i) {
    const double s = frames > 1 ? static_cast<double>(i) / (frames - 1) : 0.0;
    const double theta = (start_deg + s * sweep_deg) * kDegToRad;
    const Vec3 eye = center + Vec3(radius * std::cos(theta), radius * std::sin(theta), height);
    out.push_back(LookAt(eye, target));
  }
  return out;
}

std::optional<RayHit> CastRay(const SyntheticScene& scene, const Vec3& origin,
                              const Vec3& direction) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < scene.patches.size(); ++i) {
    const SurfacePatch& p = scene.patches[i];
    const Vec3 n = p.edge_u.cross(p.edge_v);
    const double denom = n.dot(direction);
    if (std::abs(denom) < 1e-15) continue;
    const double t = n.dot(p.origin - origin) / denom;
    if (!(t > 0.0) || (best && t >= best->t)) continue;
    const Vec3 hit = origin + t * direction;
    const Vec3 rel = hit - p.origin;
    const double s = rel.dot(p.edge_u) / p.edge_u.squaredNorm();
    const double r = rel.dot(p.edge_v) / p.edge_v.squaredNorm();
    constexpr double kEps = 1e-12;
    if (s < -kEps || s > 1.0 + kEps || r < -kEps || r > 1.0 + kEps) continue;
    best = RayHit{t, static_cast<int>(i), hit};
  }
  return best;
}

std::vector<std::string> NoiseModel::Validate() const {
  std::vector<std::string> errors;
  auto non_negative = [&](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) errors.push_back(std::string(name) + " must be >= 0");
  };
  non_negative(depth_sigma, "depth_sigma");
  non_negative(depth_sigma_relative, "depth_sigma_relative");
  non_negative(scale_sigma, "scale_sigma");
  non_negative(warp_amplitude, "warp_amplitude");
  non_negative(pose_sigma_rot_deg, "pose_sigma_rot_deg");
  non_negative(pose_sigma_t, "pose_sigma_t");
  non_negative(feature_sigma, "feature_sigma");
  non_negative(jitter_sigma, "jitter_sigma");
  non_negative(normal_sigma_deg, "normal_sigma_deg");
  if (!(scale_bias > 0.0)) errors.push_back("scale_bias must be > 0");
  if (!(warp_wavelength > 0.0)) errors.push_back("warp_wavelength must be > 0");
  if (!(jitter_wavelength > 0.0)) errors.push_back("jitter_wavelength must be > 0");
  return errors;
}

SyntheticSource::SyntheticSource(SyntheticScene scene, NoiseModel noise, std::uint64_t seed)
    : scene_(std::move(scene)), noise_(noise), seed_(seed) {
  if (const auto errors = noise_.Validate(); !errors.empty()) {
    throw Error("noise model: " + errors.front());
  }
  if (!scene_.intrinsics.IsValid()) throw Error("synthetic scene: invalid intrinsics");
  if (scene_.class_features.cols() == 0) throw Error("synthetic scene: no class features");
}

std::optional<RigidPose> SyntheticSource::GroundTruthPose(int frame_id) const {
  if (frame_id < 0 || frame_id >= FrameCount()) return std::nullopt;
  return scene_.trajectory[static_cast<std::size_t>(frame_id)];
}

double SyntheticSource::FrameScale(int frame_id) const {
  std::mt19937_64 rng = MakeRng(seed_, kFrameStream, static_cast<std::uint64_t>(frame_id));
  std::normal_distribution<double> normal;
  const double z = normal(rng);
  return noise_.scale_bias * std::exp(noise_.scale_sigma * z);
}

std::vector<Prediction> SyntheticSource::Infer(std::span<const int> frame_ids,
                                               std::span<const PoseHint> hints) {
  ++calls_;
  for (int f : frame_ids) {
    if (f < 0 || f >= FrameCount()) {
      throw Error("synthetic source: unknown frame " + std::to_string(f));
    }
  }
  // Common frame: the hinted frame sits at its hinted pose.
  RigidPose to_common = RigidPose::Identity();
  int anchor = -1;
  if (!hints.empty()) {
    anchor = hints.front().frame_id;
    const auto gt = GroundTruthPose(anchor);
    if (!gt) throw Error("synthetic source: unknown hinted frame " + std::to_string(anchor));
    to_common = hints.front().pose * gt->Inverse();
  }

  std::vector<Prediction> out;
  out.reserve(frame_ids.size());
  for (int f : frame_ids) {
    const bool is_anchor = f == anchor;
    RigidPose perturbation = RigidPose::Identity();
    if (!is_anchor) {
      std::mt19937_64 rng = MakeRng(seed_, kCallStream, static_cast<std::uint64_t>(f),
                                    calls_ * 2 + 1);
      perturbation.rotation = RandomRotation(noise_.pose_sigma_rot_deg * kDegToRad, rng);
      if (noise_.pose_sigma_t > 0.0) {
        std::normal_distribution<double> normal(0.0, noise_.pose_sigma_t);
        perturbation.translation = Vec3(normal(rng), normal(rng), normal(rng));
      }
    }
    const RigidPose predicted =
        to_common * scene_.trajectory[static_cast<std::size_t>(f)] * perturbation;
    out.push_back(Render(f, predicted, is_anchor));
  }
  return out;
}

Prediction SyntheticSource::Render(int frame_id, const RigidPose& predicted_pose,
                                   bool /*is_anchor*/) const {
  const CameraIntrinsics& K = scene_.intrinsics;
  const RigidPose& gt = scene_.trajectory[static_cast<std::size_t>(frame_id)];
  const Mat3 world_to_cam = gt.rotation.transpose();
  const int dim = scene_.FeatureDim();

  Prediction pred;
  pred.frame_id = frame_id;
  pred.Resize(K.height, K.width, dim);
  pred.intrinsics = K;
  pred.pose = predicted_pose;

  std::mt19937_64 frame_rng =
      MakeRng(seed_, kFrameStream, static_cast<std::uint64_t>(frame_id), 1);
  const SmoothField warp(noise_.warp_amplitude, noise_.warp_wavelength, frame_rng);
  std::mt19937_64 call_rng =
      MakeRng(seed_, kCallStream, static_cast<std::uint64_t>(frame_id), calls_ * 2);
  const SmoothField jitter(noise_.jitter_sigma, noise_.jitter_wavelength, call_rng);
  std::normal_distribution<double> normal;

  // Camera-frame points first, so scale drift can act about their centroid.
  std::vector<Vec3> cam_points(pred.PixelCount(), Vec3::Zero());
  Vec3 centroid = Vec3::Zero();
  std::size_t count = 0;
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const std::size_t idx = static_cast<std::size_t>(v) * K.width + u;
      const Vec3 ray = K.Backproject(u, v);
      const auto hit = CastRay(scene_, gt.translation, gt.rotation * ray);
      if (!hit || hit->t > scene_.max_depth) continue;
      const SurfacePatch& patch = scene_.patches[static_cast<std::size_t>(hit->patch)];

      const double sigma = noise_.depth_sigma + noise_.depth_sigma_relative * hit->t;
      const double depth = hit->t + (sigma > 0.0 ? sigma * normal(call_rng) : 0.0);
      cam_points[idx] = ray * depth;
      centroid += cam_points[idx];
      ++count;
      pred.valid[idx] = 1;

      Vec3 n = world_to_cam * patch.Normal();
      if (n.dot(ray) > 0.0) n = -n;
      if (noise_.normal_sigma_deg > 0.0) {
        n = (RandomRotation(noise_.normal_sigma_deg * kDegToRad, call_rng) * n).normalized();
      }
      pred.normals[idx] = predicted_pose.rotation * n;

      double checker = 1.0;
      if (patch.checker_size > 0.0) {
        const Vec3 rel = hit->point - patch.origin;
        const double a = rel.dot(patch.edge_u.normalized()) / patch.checker_size;
        const double b = rel.dot(patch.edge_v.normalized()) / patch.checker_size;
        const auto parity = static_cast<long long>(std::floor(a)) +
                            static_cast<long long>(std::floor(b));
        checker = (parity % 2 == 0) ? 1.0 : 0.55;
      }
      const double shade = 0.35 + 0.65 * std::abs(patch.Normal().dot(scene_.light_direction));
      pred.colors[idx] = (patch.albedo * checker * shade).cwiseMax(0.0).cwiseMin(1.0);

      VecX f = scene_.class_features.col(patch.label);
      if (noise_.feature_sigma > 0.0) {
        for (int d = 0; d < dim; ++d) f[d] += noise_.feature_sigma * normal(call_rng);
      }
      pred.features.col(static_cast<Eigen::Index>(idx)) = f.normalized();
    }
  }
  if (count > 0) centroid /= static_cast<double>(count);

  const double scale = FrameScale(frame_id);
  for (std::size_t idx = 0; idx < cam_points.size(); ++idx) {
    if (!pred.valid[idx]) continue;
    Vec3 p = centroid + scale * (cam_points[idx] - centroid);
    p += warp(p) + jitter(p);
    pred.points[idx] = predicted_pose * p;
  }
  return pred;
}

PointCloud GroundTruthCloud(const SyntheticScene& scene, std::span<const RigidPose> poses,
                            const GroundTruthOptions& options) {
  PointCloud cloud;
  const CameraIntrinsics& K = scene.intrinsics;
  const bool filter = options.visibility_filter && !poses.empty();
  auto visible = [&](const Vec3& p) {
    for (const RigidPose& pose : poses) {
      const Vec3 pc = pose.rotation.transpose() * (p - pose.translation);
      if (pc.z() <= 1e-6) continue;
      const double u = K.fx * pc.x() / pc.z() + K.cx;
      const double v = K.fy * pc.y() / pc.z() + K.cy;
      if (u < -0.5 || v < -0.5 || u > K.width - 0.5 || v > K.height - 0.5) continue;
      const auto hit = CastRay(scene, pose.translation, (p - pose.translation) / pc.z());
      if (hit && hit->t >= pc.z() * (1.0 - 1e-6) - 1e-9) return true;
    }
    return false;
  };
  for (const SurfacePatch& patch : scene.patches) {
    const int nu = std::max(1, static_cast<int>(std::lround(patch.edge_u.norm() / options.spacing)));
    const int nv = std::max(1, static_cast<int>(std::lround(patch.edge_v.norm() / options.spacing)));
    const Vec3 normal = patch.Normal();
    for (int j = 0; j <= nv; ++j) {
      for (int i = 0; i <= nu; ++i) {
        const Vec3 p = patch.origin + (static_cast<double>(i) / nu) * patch.edge_u +
                       (static_cast<double>(j) / nv) * patch.edge_v;
        if (filter && !visible(p)) continue;
        cloud.points.push_back(p);
        cloud.normals.push_back(normal);
        cloud.colors.push_back(patch.albedo);
        cloud.labels.push_back(patch.label);
      }
    }
  }
  return cloud;
}

}  // namespace gaussfuse
