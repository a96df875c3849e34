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

#include "gaussfuse/types.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace gaussfuse {

RigidPose RigidPose::FromAngleAxis(double angle_rad, const Vec3& axis,
                                   const Vec3& translation) {
  return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(),
          translation};
}

RigidPose RigidPose::FromQuaternion(const Eigen::Quaterniond& q,
                                    const Vec3& translation) {
  return {q.normalized().toRotationMatrix(), translation};
}

Eigen::Quaterniond RigidPose::Quaternion() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  return q;
}

Eigen::Matrix4d RigidPose::Matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidPose RigidPose::FromMatrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

bool RigidPose::IsValid(double tolerance) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho =
      (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tolerance && std::abs(rotation.determinant() - 1.0) <= tolerance;
}

void RigidPose::Orthonormalize() {
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  rotation = svd.matrixU() * d * svd.matrixV().transpose();
}

PoseError ComparePoses(const RigidPose& a, const RigidPose& b) {
  const Mat3 delta = a.rotation.transpose() * b.rotation;
  const double c = std::clamp((delta.trace() - 1.0) / 2.0, -1.0, 1.0);
  return {std::acos(c) * 180.0 / M_PI, (a.translation - b.translation).norm()};
}

std::size_t Prediction::ValidCount() const {
  return static_cast<std::size_t>(std::count_if(
      valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
}

std::vector<std::size_t> Prediction::ValidIndices() const {
  std::vector<std::size_t> out;
  out.reserve(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i]) out.push_back(i);
  }
  return out;
}

void Prediction::Resize(int h, int w, int feature_dim) {
  height = h;
  width = w;
  const std::size_t n = PixelCount();
  points.assign(n, Vec3::Zero());
  valid.assign(n, 0);
  colors.assign(n, Vec3::Zero());
  normals.assign(n, Vec3::UnitZ());
  features = Eigen::MatrixXd::Zero(feature_dim, static_cast<Eigen::Index>(n));
}

bool Prediction::IsConsistent() const {
  const std::size_t n = PixelCount();
  return points.size() == n && valid.size() == n && colors.size() == n &&
         normals.size() == n && static_cast<std::size_t>(features.cols()) == n;
}

Prediction Prediction::Transformed(const RigidPose& transform) const {
  Prediction out = *this;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i] = transform * points[i];
    out.normals[i] = transform.rotation * normals[i];
  }
  out.pose = transform * pose;
  return out;
}

}  // namespace gaussfuse
