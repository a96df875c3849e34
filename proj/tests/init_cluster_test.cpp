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

#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "gaussfuse/init_cluster.hpp"
#include "test_util.hpp"

namespace gaussfuse {
namespace {

using testing::UnitFeature;

AttributedPoints MakePoints(const std::vector<Vec3>& xs, int dim) {
  AttributedPoints p;
  p.points = xs;
  p.normals.assign(xs.size(), Vec3::UnitZ());
  p.colors.assign(xs.size(), Vec3::Constant(0.5));
  p.features = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < p.features.cols(); ++i) p.features(0, i) = 1.0;
  return p;
}

TEST(ChooseK, Examples) {
  EXPECT_EQ(ChooseK(140800, 11, 128), 100u);
  EXPECT_EQ(ChooseK(50, 1, 128), 1u);
  EXPECT_EQ(ChooseK(128, 1, 128), 1u);
  EXPECT_EQ(ChooseK(0, 1, 128), 1u);
}

TEST(KMeans, SeparatedBlobsRecoverTheirMeans) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.05);
  std::vector<Vec3> pts;
  const Vec3 a(0, 0, 0), b(3, 1, -2);
  Vec3 sum_a = Vec3::Zero(), sum_b = Vec3::Zero();
  for (int i = 0; i < 400; ++i) {
    const Vec3 pa = a + Vec3(n(rng), n(rng), n(rng));
    const Vec3 pb = b + Vec3(n(rng), n(rng), n(rng));
    pts.push_back(pa);
    pts.push_back(pb);
    sum_a += pa;
    sum_b += pb;
  }
  const ClusterResult r = KMeans(pts, 2, 5);
  const Vec3 mean_a = sum_a / 400, mean_b = sum_b / 400;
  const bool first_is_a = (r.centroids[0] - a).norm() < (r.centroids[1] - a).norm();
  const Vec3& ca = r.centroids[first_is_a ? 0 : 1];
  const Vec3& cb = r.centroids[first_is_a ? 1 : 0];
  EXPECT_LT((ca - mean_a).norm(), 1e-3);
  EXPECT_LT((cb - mean_b).norm(), 1e-3);
}

TEST(KMeans, EachPointItsOwnCentroidWhenNEqualsK) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}, {5, 5, 5}};
  const ClusterResult r = KMeans(pts, pts.size(), 1);
  std::vector<int> seen(pts.size(), 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT((r.centroids[static_cast<std::size_t>(r.assignment[i])] - pts[i]).norm(), 1e-12);
    ++seen[static_cast<std::size_t>(r.assignment[i])];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(KMeans, IdenticalPointsSingleCluster) {
  const std::vector<Vec3> pts(20, Vec3(1, 2, 3));
  const ClusterResult r = KMeans(pts, 1, 0);
  EXPECT_LT((r.centroids[0] - Vec3(1, 2, 3)).norm(), 1e-12);
}

TEST(KMeans, RejectsTooFewPoints) {
  const std::vector<Vec3> pts(3, Vec3::Zero());
  EXPECT_THROW(KMeans(pts, 4, 0), Error);
}

TEST(KMeans, CentroidsAreAssignedMeansAndObjectiveNeverIncreases) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) pts.emplace_back(u(rng), u(rng), 0.2 * u(rng));
  const ClusterResult r = KMeans(pts, 40, 9);
  for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
    EXPECT_LE(r.objective_history[i], r.objective_history[i - 1] * (1 + 1e-12));
  }
  std::vector<Vec3> sums(40, Vec3::Zero());
  std::vector<int> counts(40, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    sums[static_cast<std::size_t>(r.assignment[i])] += pts[i];
    ++counts[static_cast<std::size_t>(r.assignment[i])];
  }
  for (std::size_t c = 0; c < 40; ++c) {
    ASSERT_GT(counts[c], 0) << "empty cluster " << c;
    EXPECT_LT((sums[c] / counts[c] - r.centroids[c]).norm(), 1e-6);
  }
}

TEST(KMeans, DeterministicForFixedSeed) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 1000; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const ClusterResult a = KMeans(pts, 17, 4);
  const ClusterResult b = KMeans(pts, 17, 4);
  EXPECT_EQ(a.assignment, b.assignment);
  for (std::size_t c = 0; c < 17; ++c) EXPECT_EQ(a.centroids[c], b.centroids[c]);
}

TEST(GaussianFromNeighborhood, IdenticalNeighbors) {
  const AttributedPoints p = MakePoints(std::vector<Vec3>(8, Vec3(1, 1, 1)), 4);
  const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3(1, 1, 1), p, {1e-8, false});
  EXPECT_EQ(r.gaussian.normal, Vec3::UnitZ());
  EXPECT_EQ(r.gaussian.feature, UnitFeature(4, 0));
  EXPECT_LT((r.gaussian.covariance - 1e-8 * Mat3::Identity()).norm(), 1e-20);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.gaussian.blend_state, 1.0);
}

TEST(GaussianFromNeighborhood, SymmetricColorsAverage) {
  std::vector<Vec3> xs;
  for (double s : {-1.0, 1.0}) {
    xs.emplace_back(0.1 * s, 0.0, 0.0);
    xs.emplace_back(0.0, 0.1 * s, 0.0);
    xs.emplace_back(0.0, 0.0, 0.1 * s);
  }
  AttributedPoints p = MakePoints(xs, 2);
  // Each mirror pair across the center carries {0.2, 0.8}.
  p.colors = {Vec3::Constant(0.2), Vec3::Constant(0.2), Vec3::Constant(0.2),
              Vec3::Constant(0.8), Vec3::Constant(0.8), Vec3::Constant(0.8)};
  const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3::Zero(), p);
  EXPECT_LT((r.gaussian.color - Vec3::Constant(0.5)).norm(), 1e-12);
}

TEST(GaussianFromNeighborhood, WeightsFormADistribution) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<Vec3> xs;
  for (int i = 0; i < 32; ++i) xs.emplace_back(n(rng), n(rng), 0.1 * n(rng));
  const AttributedPoints p = MakePoints(xs, 3);
  for (bool squared : {false, true}) {
    const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3::Zero(), p, {1e-8, squared});
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_NEAR(r.gaussian.normal.norm(), 1.0, 1e-12);
  }
}

TEST(GaussianFromNeighborhood, RecoversSampledCovariance) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  const Vec3 sd(0.1, 0.2, 0.01);
  std::vector<Vec3> xs;
  for (int i = 0; i < 100; ++i) xs.push_back(sd.cwiseProduct(Vec3(n(rng), n(rng), n(rng))));
  const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3::Zero(), MakePoints(xs, 1));
  Eigen::SelfAdjointEigenSolver<Mat3> es(r.gaussian.covariance);
  const Vec3 truth(0.0001, 0.01, 0.04);  // ascending, as the solver returns
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(es.eigenvalues()[i], truth[i], 0.3 * truth[i]);
  }
}

TEST(GaussianFromNeighborhood, FeatureIsAlwaysANeighborFeatureAndFollowsTheMajority) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const int dim = 6;
  std::vector<Vec3> xs;
  for (int i = 0; i < 32; ++i) xs.emplace_back(u(rng), u(rng), 0.0);
  AttributedPoints p = MakePoints(xs, dim);
  for (int i = 0; i < 32; ++i) {
    VecX f = testing::RandomUnitFeature(rng, dim);
    if (i < 24) f = (UnitFeature(dim, 2) + 0.1 * f).normalized();
    p.features.col(i) = f;
  }
  const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3::Zero(), p);
  EXPECT_EQ(r.gaussian.feature, p.features.col(static_cast<Eigen::Index>(r.feature_source)));
  EXPECT_LT(r.feature_source, 24u);
}

TEST(GaussianFromNeighborhood, FlipsIncoherentNormals) {
  std::vector<Vec3> xs{{0, 0, 0}, {0.1, 0, 0}, {0, 0.1, 0}, {-0.1, 0, 0}, {0, -0.1, 0}};
  AttributedPoints p = MakePoints(xs, 1);
  p.normals = {Vec3::UnitZ(), -Vec3::UnitZ(), Vec3::UnitZ(), -Vec3::UnitZ(), Vec3::UnitZ()};
  const NeighborhoodGaussian r = GaussianFromNeighborhood(Vec3::Zero(), p);
  EXPECT_LT((r.gaussian.normal - Vec3::UnitZ()).norm(), 1e-12);
}

Prediction PlaneFrame(int id, double offset, const CameraIntrinsics& k) {
  Prediction p = testing::PlanePrediction(k.width, k.height, 2.0, 2, k);
  p.frame_id = id;
  for (Vec3& x : p.points) x.x() += offset;
  return p;
}

TEST(InitializeMap, PlaneNormalsAgree) {
  const CameraIntrinsics k{60, 60, 31.5, 23.5, 64, 48};
  const std::vector<Prediction> frames{PlaneFrame(0, 0.0, k), PlaneFrame(1, 0.3, k)};
  Config c;
  const GaussianMap map = InitializeMap(frames, c);
  EXPECT_EQ(map.size(), ChooseK(2 * 64 * 48, 2, c.lambda));
  for (const Gaussian& g : map.gaussians()) {
    EXPECT_GT(std::abs(g.normal.dot(Vec3::UnitZ())), std::cos(5.0 * M_PI / 180.0));
  }
  EXPECT_TRUE(Validate(map).empty());
}

TEST(InitializeMap, LambdaEqualToPointCountGivesOneGaussian) {
  const CameraIntrinsics k{60, 60, 31.5, 23.5, 64, 48};
  const std::vector<Prediction> frames{PlaneFrame(0, 0.0, k)};
  Config c;
  c.lambda = 64 * 48;
  EXPECT_EQ(InitializeMap(frames, c).size(), 1u);
}

TEST(InitializeMap, CheckerFeaturesStayPureClassVectors) {
  const CameraIntrinsics k{60, 60, 31.5, 23.5, 64, 48};
  Prediction p = PlaneFrame(0, 0.0, k);
  const int dim = 2;
  const VecX e0 = UnitFeature(dim, 0), e1 = UnitFeature(dim, 1);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      p.features.col(y * k.width + x) = ((x / 8 + y / 8) % 2 == 0) ? e0 : e1;
    }
  }
  const std::vector<Prediction> frames{p};
  const GaussianMap map = InitializeMap(frames, Config{});
  for (const Gaussian& g : map.gaussians()) {
    EXPECT_TRUE(g.feature == e0 || g.feature == e1);
  }
}

TEST(InitializeMap, NoValidPointsFails) {
  const CameraIntrinsics k{60, 60, 31.5, 23.5, 64, 48};
  Prediction p = PlaneFrame(0, 0.0, k);
  std::fill(p.valid.begin(), p.valid.end(), 0);
  const std::vector<Prediction> frames{p};
  EXPECT_THROW(InitializeMap(frames, Config{}), Error);
}

}  // namespace
}  // namespace gaussfuse
