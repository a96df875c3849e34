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

#ifndef GAUSSFUSE_SYNTHETIC_SOURCE_HPP_
#define GAUSSFUSE_SYNTHETIC_SOURCE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaussfuse/observation_source.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

// Textured rectangle origin + s u + t v, s, t in [0, 1].
struct SurfacePatch {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  Vec3 albedo = Vec3::Constant(0.7);
  double checker_size = 0.25;  // m; <= 0 disables the checker
  int label = 0;

  Vec3 Normal() const { return edge_u.cross(edge_v).normalized(); }
  double Area() const { return edge_u.cross(edge_v).norm(); }
};

struct SyntheticScene {
  std::vector<SurfacePatch> patches;
  std::vector<std::string> class_names;
  // One unit column per class.
  Eigen::MatrixXd class_features;
  CameraIntrinsics intrinsics;
  std::vector<RigidPose> trajectory;  // ground-truth camera-to-world
  double fps = 30.0;
  Vec3 light_direction = Vec3(0.3, -1.0, 0.5).normalized();
  double max_depth = 20.0;

  int FeatureDim() const { return static_cast<int>(class_features.rows()); }

  // Six outward faces of an axis-aligned box.
  void AddBox(const Vec3& min, const Vec3& max, const Vec3& albedo, int label,
              double checker_size = 0.25);
  // Floor, ceiling and four walls of [min, max].
  void AddRoom(const Vec3& min, const Vec3& max, const std::vector<int>& labels,
               const std::vector<Vec3>& albedos, double checker_size = 0.25);
  // Orthonormal (pairwise orthogonal) class features of dimension `dim`.
  void MakeClassFeatures(int classes, int dim, std::uint64_t seed);
};

// Camera ring around `center` at `radius`, looking at `target`.
std::vector<RigidPose> OrbitTrajectory(const Vec3& center, double radius, double height,
                                       const Vec3& target, double start_deg, double sweep_deg,
                                       int frames);
// Camera-to-world pose at `eye` looking at `target` with -y roughly along `up`.
RigidPose LookAt(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

struct RayHit {
  double t = 0.0;  // along a direction with unit camera z, so t is the depth
  int patch = -1;
  Vec3 point = Vec3::Zero();
};
std::optional<RayHit> CastRay(const SyntheticScene& scene, const Vec3& origin,
                              const Vec3& direction);

struct NoiseModel {
  double depth_sigma = 0.0;           // m, along the viewing ray
  double depth_sigma_relative = 0.0;  // fraction of depth
  double scale_sigma = 0.0;           // log-normal per-frame scale drift
  double scale_bias = 1.0;            // multiplies the drift factor
  double warp_amplitude = 0.0;        // m, persistent per frame
  double warp_wavelength = 2.0;       // m
  double pose_sigma_rot_deg = 0.0;    // per call, never applied to the anchor
  double pose_sigma_t = 0.0;          // m
  double feature_sigma = 0.0;
  double jitter_sigma = 0.0;          // m, fresh smooth field per call
  double jitter_wavelength = 1.0;     // m
  double normal_sigma_deg = 0.0;

  std::vector<std::string> Validate() const;
};

// Ray-cast feed-forward model stand-in over a known scene.
class SyntheticSource final : public ObservationSource {
 public:
  SyntheticSource(SyntheticScene scene, NoiseModel noise, std::uint64_t seed);

  int FrameCount() const override { return static_cast<int>(scene_.trajectory.size()); }
  double Timestamp(int frame_id) const override { return frame_id / scene_.fps; }
  CameraIntrinsics Intrinsics() const override { return scene_.intrinsics; }
  int FeatureDim() const override { return scene_.FeatureDim(); }
  std::vector<Prediction> Infer(std::span<const int> frame_ids,
                                std::span<const PoseHint> hints) override;
  std::optional<RigidPose> GroundTruthPose(int frame_id) const override;

  const SyntheticScene& scene() const { return scene_; }
  const NoiseModel& noise() const { return noise_; }
  // Persistent per-frame scale drift factor.
  double FrameScale(int frame_id) const;
  std::uint64_t calls() const { return calls_; }

 private:
  Prediction Render(int frame_id, const RigidPose& predicted_pose, bool is_anchor) const;

  SyntheticScene scene_;
  NoiseModel noise_;
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

struct GroundTruthOptions {
  double spacing = 0.02;  // m
  // Keep only samples seen unoccluded by at least one pose; all samples
  // when `poses` is empty.
  bool visibility_filter = true;
};

// Grid-sampled labeled surface points with normals.
PointCloud GroundTruthCloud(const SyntheticScene& scene, std::span<const RigidPose> poses,
                            const GroundTruthOptions& options = {});

}  // namespace gaussfuse

#endif  // GAUSSFUSE_SYNTHETIC_SOURCE_HPP_
