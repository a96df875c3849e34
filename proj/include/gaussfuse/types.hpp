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

#ifndef GAUSSFUSE_TYPES_HPP_
#define GAUSSFUSE_TYPES_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gaussfuse {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;

// Base of all recoverable errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rigid transform x' = R x + t. Used both for camera-to-world poses and for
// frame-to-frame corrections.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose Identity() { return {}; }
  static RigidPose FromAngleAxis(double angle_rad, const Vec3& axis,
                                 const Vec3& translation);
  static RigidPose FromQuaternion(const Eigen::Quaterniond& q,
                                  const Vec3& translation);

  Vec3 operator*(const Vec3& point) const {
    return rotation * point + translation;
  }
  RigidPose operator*(const RigidPose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  RigidPose Inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }
  Eigen::Quaterniond Quaternion() const;
  Eigen::Matrix4d Matrix() const;
  static RigidPose FromMatrix(const Eigen::Matrix4d& m);

  // Orthonormality and det = +1 within `tolerance`.
  bool IsValid(double tolerance = 1e-9) const;
  // Re-orthonormalizes the rotation (nearest rotation in Frobenius norm).
  void Orthonormalize();
};

// Rotation angle in degrees and translation distance between two poses.
struct PoseError {
  double rotation_deg = 0.0;
  double translation = 0.0;
};
PoseError ComparePoses(const RigidPose& a, const RigidPose& b);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool IsValid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
           cy < height;
  }
  // Ray direction with unit z for pixel (u, v).
  Vec3 Backproject(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
};

// One component of the map.
struct Gaussian {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  VecX feature;
  // Running-average weight of the last blended update; 1 for a new Gaussian.
  double blend_state = 1.0;
};

// Pixel-aligned point map for one frame, as produced by the observation
// source. Attributes of pixels whose `valid` flag is zero carry no meaning.
struct Prediction {
  int frame_id = -1;
  int height = 0;
  int width = 0;
  std::vector<Vec3> points;
  std::vector<std::uint8_t> valid;
  std::vector<Vec3> colors;
  std::vector<Vec3> normals;
  // One column per pixel, `feature_dim` rows.
  Eigen::MatrixXd features;
  RigidPose pose;  // camera-to-(prediction or map) frame
  CameraIntrinsics intrinsics;

  std::size_t PixelCount() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  int FeatureDim() const { return static_cast<int>(features.rows()); }
  std::size_t ValidCount() const;
  std::vector<std::size_t> ValidIndices() const;

  // Allocates all per-pixel arrays with every pixel invalid.
  void Resize(int h, int w, int feature_dim);
  // Shape consistency of all per-pixel arrays.
  bool IsConsistent() const;
  // Applies `transform` to points, normals and pose.
  Prediction Transformed(const RigidPose& transform) const;
};

// Oriented colored point set, the common currency of registration and
// evaluation.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<Vec3> colors;
  std::vector<int> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace gaussfuse

#endif  // GAUSSFUSE_TYPES_HPP_
