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

#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gaussfuse/scene_io.hpp"
#include "gaussfuse/synthetic_source.hpp"
#include "test_util.hpp"

namespace gaussfuse {
namespace {

// A 10 x 10 m plane at z = 2 in front of a camera at the origin.
SyntheticScene PlaneScene() {
  SyntheticScene scene;
  scene.patches.push_back({Vec3(-5, -5, 2), Vec3(10, 0, 0), Vec3(0, 10, 0), Vec3::Constant(0.6),
                           0.25, 0});
  scene.MakeClassFeatures(1, 8, 1);
  scene.intrinsics = {60, 60, 39.5, 29.5, 80, 60};
  scene.trajectory = {RigidPose::Identity(), RigidPose::Identity()};
  return scene;
}

std::vector<Prediction> InferOne(SyntheticSource& source, int frame) {
  const std::vector<int> ids{frame};
  return source.Infer(ids, {});
}

TEST(SyntheticSource, NoiseFreePlaneIsExact) {
  SyntheticSource source(PlaneScene(), NoiseModel{}, 1);
  const Prediction p = InferOne(source, 0).front();
  ASSERT_EQ(p.ValidCount(), p.PixelCount());
  for (std::size_t i = 0; i < p.PixelCount(); ++i) {
    EXPECT_NEAR(p.points[i].z(), 2.0, 1e-9);
    EXPECT_LT((p.normals[i] + Vec3::UnitZ()).norm(), 1e-12);
    EXPECT_NEAR(p.features.col(static_cast<Eigen::Index>(i)).norm(), 1.0, 1e-12);
  }
  // Pixel (u, v) backprojects along its own ray.
  const std::size_t corner = 0;
  EXPECT_NEAR(p.points[corner].x(), 2.0 * (0 - 39.5) / 60.0, 1e-12);
}

TEST(SyntheticSource, JitterKeepsTheValidMask) {
  NoiseModel noise;
  noise.jitter_sigma = 0.005;
  SyntheticSource clean(testing::TestRoomScene(4), NoiseModel{}, 3);
  SyntheticSource jittered(testing::TestRoomScene(4), noise, 3);
  for (int f = 0; f < 4; ++f) {
    const Prediction a = InferOne(clean, f).front();
    const Prediction b = InferOne(jittered, f).front();
    EXPECT_EQ(a.valid, b.valid);
    double moved = 0.0;
    for (std::size_t i : a.ValidIndices()) moved += (a.points[i] - b.points[i]).norm();
    EXPECT_GT(moved, 0.0);
  }
}

TEST(SyntheticSource, ScaleBiasScalesPairwiseDistances) {
  NoiseModel noise;
  noise.scale_bias = 1.05;
  SyntheticSource clean(testing::TestRoomScene(3), NoiseModel{}, 5);
  SyntheticSource scaled(testing::TestRoomScene(3), noise, 5);
  EXPECT_DOUBLE_EQ(scaled.FrameScale(1), 1.05);
  const Prediction a = InferOne(clean, 1).front();
  const Prediction b = InferOne(scaled, 1).front();
  const auto idx = a.ValidIndices();
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, idx.size() - 1);
  for (int k = 0; k < 500; ++k) {
    const std::size_t i = idx[pick(rng)], j = idx[pick(rng)];
    const double da = (a.points[i] - a.points[j]).norm();
    if (da < 1e-3) continue;
    EXPECT_NEAR((b.points[i] - b.points[j]).norm() / da, 1.05, 1e-9);
  }
}

TEST(SyntheticSource, NoiseFreePointsLieOnTheScene) {
  const SyntheticScene scene = testing::TestRoomScene(5);
  SyntheticSource source(scene, NoiseModel{}, 2);
  for (int f = 0; f < 5; ++f) {
    const Prediction p = InferOne(source, f).front();
    const RigidPose& gt = scene.trajectory[static_cast<std::size_t>(f)];
    EXPECT_LT((p.pose.Matrix() - gt.Matrix()).norm(), 1e-12);
    ASSERT_GT(p.ValidCount(), p.PixelCount() / 2);
    for (std::size_t i : p.ValidIndices()) {
      const Vec3 pc = gt.rotation.transpose() * (p.points[i] - gt.translation);
      const auto hit = CastRay(scene, gt.translation, gt.rotation * (pc / pc.z()));
      ASSERT_TRUE(hit.has_value());
      ASSERT_NEAR(hit->t, pc.z(), 1e-9);
      // Normals face the camera.
      EXPECT_LT(p.normals[i].dot(p.points[i] - gt.translation), 0.0);
    }
  }
}

TEST(SyntheticSource, NoiseFreeFeaturesAreClassVectors) {
  const SyntheticScene scene = testing::TestRoomScene(2);
  SyntheticSource source(scene, NoiseModel{}, 2);
  const Prediction p = InferOne(source, 0).front();
  for (std::size_t i : p.ValidIndices()) {
    const VecX f = p.features.col(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd cos = scene.class_features.transpose() * f;
    EXPECT_NEAR(cos.maxCoeff(), 1.0, 1e-12);
  }
}

TEST(SyntheticSource, ClassFeaturesAreOrthonormal) {
  SyntheticScene scene;
  scene.MakeClassFeatures(5, 16, 7);
  const Eigen::MatrixXd gram = scene.class_features.transpose() * scene.class_features;
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).norm(), 1e-12);
  EXPECT_THROW(scene.MakeClassFeatures(17, 16, 7), Error);
}

TEST(SyntheticSource, DeterministicPerSeed) {
  NoiseModel noise;
  noise.depth_sigma = 0.02;
  noise.pose_sigma_t = 0.01;
  noise.feature_sigma = 0.1;
  SyntheticSource a(testing::TestRoomScene(4), noise, 11);
  SyntheticSource b(testing::TestRoomScene(4), noise, 11);
  SyntheticSource c(testing::TestRoomScene(4), noise, 12);
  const std::vector<int> ids{0, 2, 3};
  for (int call = 0; call < 2; ++call) {
    const auto pa = a.Infer(ids, {});
    const auto pb = b.Infer(ids, {});
    const auto pc = c.Infer(ids, {});
    for (std::size_t k = 0; k < ids.size(); ++k) {
      EXPECT_EQ(pa[k].points, pb[k].points);
      EXPECT_EQ(pa[k].features, pb[k].features);
      EXPECT_NE(pa[k].points, pc[k].points);
    }
  }
}

TEST(SyntheticSource, FreshNoisePerCallButPersistentScale) {
  NoiseModel noise;
  noise.depth_sigma = 0.01;
  noise.scale_sigma = 0.05;
  SyntheticSource source(testing::TestRoomScene(3), noise, 4);
  const double s = source.FrameScale(2);
  const Prediction first = InferOne(source, 2).front();
  const Prediction second = InferOne(source, 2).front();
  EXPECT_NE(first.points, second.points);
  EXPECT_EQ(source.FrameScale(2), s);
  EXPECT_NE(source.FrameScale(1), s);
  EXPECT_EQ(source.calls(), 2u);
}

TEST(SyntheticSource, HintedFrameSitsAtItsHint) {
  NoiseModel noise;
  noise.pose_sigma_rot_deg = 1.0;
  noise.pose_sigma_t = 0.02;
  const SyntheticScene scene = testing::TestRoomScene(6);
  SyntheticSource source(scene, noise, 8);
  const RigidPose hint = RigidPose::FromAngleAxis(0.4, Vec3(0, 0, 1), Vec3(1, 2, 3));
  const std::vector<int> ids{1, 3, 5};
  const std::vector<PoseHint> hints{{3, hint}};
  const auto preds = source.Infer(ids, hints);
  EXPECT_LT((preds[1].pose.Matrix() - hint.Matrix()).norm(), 1e-12);
  // Other frames carry pose noise relative to the GT composed into the hint frame.
  const RigidPose to_common = hint * scene.trajectory[3].Inverse();
  const RigidPose expected = to_common * scene.trajectory[1];
  EXPECT_GT((preds[0].pose.translation - expected.translation).norm(), 0.0);
  EXPECT_LT((preds[0].pose.translation - expected.translation).norm(), 0.2);
}

TEST(SyntheticSource, RejectsBadInput) {
  NoiseModel bad;
  bad.depth_sigma = -1.0;
  EXPECT_THROW(SyntheticSource(testing::TestRoomScene(2), bad, 0), Error);
  SyntheticSource source(testing::TestRoomScene(2), NoiseModel{}, 0);
  const std::vector<int> ids{2};
  EXPECT_THROW(source.Infer(ids, {}), Error);
}

TEST(SyntheticSource, EmptySceneGivesNoValidPixels) {
  SyntheticScene scene = PlaneScene();
  scene.patches.clear();
  SyntheticSource source(scene, NoiseModel{}, 0);
  EXPECT_EQ(InferOne(source, 0).front().ValidCount(), 0u);
  EXPECT_TRUE(GroundTruthCloud(scene, {}).empty());
}

TEST(GroundTruthCloud, GridCountOnAUnitPlane) {
  SyntheticScene scene;
  scene.patches.push_back({Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), Vec3::Constant(0.5), 0.25, 2});
  GroundTruthOptions options;
  options.spacing = 0.01;
  const PointCloud cloud = GroundTruthCloud(scene, {}, options);
  EXPECT_EQ(cloud.size(), 10201u);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_EQ(cloud.labels[i], 2);
    EXPECT_EQ(cloud.normals[i], Vec3::UnitZ());
  }
}

TEST(GroundTruthCloud, BoxNormalsPointOutward) {
  SyntheticScene scene;
  scene.AddBox(Vec3(-1, -1, -1), Vec3(1, 2, 3), Vec3::Constant(0.5), 0);
  const PointCloud cloud = GroundTruthCloud(scene, {});
  const Vec3 center(0, 0.5, 1);
  std::set<std::tuple<double, double, double>> distinct;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    EXPECT_GT(cloud.normals[i].dot(cloud.points[i] - center), 0.0);
    distinct.insert({cloud.normals[i].x(), cloud.normals[i].y(), cloud.normals[i].z()});
  }
  EXPECT_EQ(distinct.size(), 6u);
}

TEST(GroundTruthCloud, VisibilityFilterDropsOccludedSamples) {
  // A wide screen at z = 2 hides a smaller plate at z = 3 from a camera at the origin.
  SyntheticScene scene;
  scene.patches.push_back({Vec3(-10, -10, 2), Vec3(20, 0, 0), Vec3(0, 20, 0),
                           Vec3::Constant(0.5), 0.25, 0});
  scene.patches.push_back({Vec3(-0.5, -0.5, 3), Vec3(1, 0, 0), Vec3(0, 1, 0),
                           Vec3::Constant(0.5), 0.25, 1});
  scene.intrinsics = {60, 60, 39.5, 29.5, 80, 60};
  const std::vector<RigidPose> poses{RigidPose::Identity()};
  GroundTruthOptions options;
  options.spacing = 0.05;
  const PointCloud all = GroundTruthCloud(scene, {}, options);
  const PointCloud seen = GroundTruthCloud(scene, poses, options);
  EXPECT_EQ(all.size(), 401u * 401u + 21u * 21u);
  ASSERT_GT(seen.size(), 0u);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    EXPECT_EQ(seen.labels[i], 0);
    // Inside the frustum: |x| / z and |y| / z bounded by the image half-extent.
    EXPECT_LE(std::abs(seen.points[i].x()) / 2.0, 40.0 / 60.0 + 1e-9);
    EXPECT_LE(std::abs(seen.points[i].y()) / 2.0, 30.0 / 60.0 + 1e-9);
  }
}

TEST(NoiseModelJson, RoundTripAndUnknownKeys) {
  NoiseModel n;
  n.depth_sigma = 0.02;
  n.scale_sigma = 0.03;
  n.feature_sigma = 0.1;
  n.normal_sigma_deg = 2.0;
  const NoiseModel back = NoiseModelFromJson(NoiseModelToJson(n));
  EXPECT_EQ(back.depth_sigma, n.depth_sigma);
  EXPECT_EQ(back.scale_sigma, n.scale_sigma);
  EXPECT_EQ(back.feature_sigma, n.feature_sigma);
  EXPECT_EQ(back.normal_sigma_deg, n.normal_sigma_deg);
  EXPECT_THROW(NoiseModelFromJson(R"({"depth_sgima": 0.1})"), Error);
  EXPECT_THROW(NoiseModelFromJson(R"({"depth_sigma": -0.1})"), Error);
}

TEST(SceneJson, LoadsTheShippedRoom) {
  const SceneSpec spec = LoadScene(std::string(GAUSSFUSE_DATA_DIR) + "/room.json");
  EXPECT_GT(spec.scene.patches.size(), 6u);
  EXPECT_TRUE(spec.scene.intrinsics.IsValid());
  EXPECT_GT(spec.scene.trajectory.size(), 0u);
  EXPECT_EQ(static_cast<std::size_t>(spec.scene.class_features.cols()),
            spec.scene.class_names.size());
  EXPECT_THROW(SceneFromJson(R"({"camera": {"fx": 1}})"), Error);
}

}  // namespace
}  // namespace gaussfuse
