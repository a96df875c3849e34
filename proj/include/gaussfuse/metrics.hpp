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

#ifndef GAUSSFUSE_METRICS_HPP_
#define GAUSSFUSE_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaussfuse/config.hpp"
#include "gaussfuse/gaussian_map.hpp"
#include "gaussfuse/icp.hpp"
#include "gaussfuse/trajectory_io.hpp"
#include "gaussfuse/types.hpp"

namespace gaussfuse {

struct AteResult {
  double rmse = 0.0;   // meters, after similarity alignment
  // Scale of the estimate relative to ground truth: 1 / (scale of the
  // estimate-to-ground-truth alignment).
  double scale = 1.0;
  std::size_t pairs = 0;
  SimilarityFit alignment;  // estimate -> ground truth
};

// Pairs poses by frame id. Throws naming the first estimated frame without
// a ground-truth pose, or when fewer than 3 pairs exist.
AteResult AteRmse(const Trajectory& estimated, const Trajectory& ground_truth);

// 100 min(s, 1/s).
double ScaleScore(double scale);

struct ReconstructionMetrics {
  double accuracy = 0.0;    // mean reconstructed -> gt distance, m
  double completion = 0.0;  // mean gt -> reconstructed distance, m
  double precision = 0.0;   // percent
  double recall = 0.0;      // percent
  double f1 = 0.0;          // percent
  double normal_consistency = 0.0;  // percent, mean |cos| over mutual nearest pairs
  std::size_t mutual_pairs = 0;
};

ReconstructionMetrics EvaluateReconstruction(const PointCloud& reconstructed,
                                             const PointCloud& ground_truth,
                                             double threshold = 0.2);

struct Segmentation {
  std::vector<int> classes;              // one per Gaussian
  std::vector<std::uint8_t> low_confidence;  // best cosine <= 0
};

// Highest-cosine class per Gaussian; ties go to the lowest class index.
Segmentation SegmentMap(const GaussianMap& map, std::span<const VecX> class_embeddings);

struct SegmentationMetrics {
  double miou = 0.0;
  double f_miou = 0.0;
  double acc = 0.0;
  std::size_t classes = 0;  // classes present in the truth labels
};

// Scores already-matched label pairs over classes present in `truth`.
SegmentationMetrics ScoreSegmentation(std::span<const int> predicted, std::span<const int> truth);
// Matches each center to its nearest labeled ground-truth point first.
SegmentationMetrics EvaluateSegmentation(std::span<const Vec3> centers,
                                         std::span<const int> predicted,
                                         const PointCloud& ground_truth);

struct MetricsReport {
  std::optional<double> ate_rmse;
  std::optional<double> scale_score;
  std::optional<double> accuracy;
  std::optional<double> completion;
  std::optional<double> f1_at_0_2;
  std::optional<double> normal_consistency;
  std::optional<double> miou;
  std::optional<double> f_miou;
  std::optional<double> acc;

  std::vector<std::string> Validate() const;
  std::string ToJson() const;
  std::string ToText() const;
};

// Gaussian means with normals, colors and (if given) labels.
PointCloud MapCloud(const GaussianMap& map, std::span<const int> labels = {});

// One back-projected point per `config.densify_pixel_stride` pixel of the
// expected-depth render from every trajectory pose.
PointCloud DensifyMap(const GaussianMap& map, const Trajectory& trajectory,
                      const CameraIntrinsics& intrinsics, const Config& config);

struct EvaluationInputs {
  const Trajectory* ground_truth_trajectory = nullptr;
  const PointCloud* ground_truth_cloud = nullptr;
  std::span<const VecX> class_embeddings;
  const CameraIntrinsics* intrinsics = nullptr;  // needed for densification
};

MetricsReport Evaluate(const GaussianMap& map, const Trajectory& trajectory,
                       const EvaluationInputs& inputs, const Config& config);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_METRICS_HPP_
