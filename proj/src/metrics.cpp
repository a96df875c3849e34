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

#include "gaussfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gaussfuse/kdtree.hpp"
#include "gaussfuse/splatting.hpp"

namespace gaussfuse {

AteResult AteRmse(const Trajectory& estimated, const Trajectory& ground_truth) {
  std::vector<Vec3> est;
  std::vector<Vec3> gt;
  for (const TrajectoryEntry& e : estimated.entries()) {
    const TrajectoryEntry* g = ground_truth.Find(e.frame_id);
    if (g == nullptr) {
      throw Error("ate: frame " + std::to_string(e.frame_id) + " has no ground-truth pose");
    }
    est.push_back(e.pose.translation);
    gt.push_back(g->pose.translation);
  }
  if (est.size() < 3) {
    throw Error("ate: need at least 3 matched poses, got " + std::to_string(est.size()));
  }
  AteResult out;
  out.pairs = est.size();
  out.alignment = FitSimilarity(est, gt, {}, true);
  double sq = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const Vec3 aligned =
        out.alignment.scale * (out.alignment.pose.rotation * est[i]) + out.alignment.pose.translation;
    sq += (aligned - gt[i]).squaredNorm();
  }
  out.rmse = std::sqrt(sq / static_cast<double>(est.size()));
  out.scale = 1.0 / out.alignment.scale;
  return out;
}

double ScaleScore(double scale) {
  if (!(scale > 0.0)) throw Error("scale score: scale must be positive");
  return 100.0 * std::min(scale, 1.0 / scale);
}

ReconstructionMetrics EvaluateReconstruction(const PointCloud& reconstructed,
                                             const PointCloud& ground_truth, double threshold) {
  if (reconstructed.empty() || ground_truth.empty()) {
    throw Error("reconstruction metrics: empty cloud");
  }
  const KdTree rec_tree(reconstructed.points);
  const KdTree gt_tree(ground_truth.points);
  ReconstructionMetrics m;

  std::vector<std::size_t> rec_to_gt(reconstructed.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < reconstructed.size(); ++i) {
    const Neighbor nb = gt_tree.Nearest(reconstructed.points[i]);
    rec_to_gt[i] = nb.index;
    const double d = std::sqrt(nb.distance_sq);
    sum += d;
    hits += d < threshold ? 1 : 0;
  }
  m.accuracy = sum / static_cast<double>(reconstructed.size());
  const double precision = static_cast<double>(hits) / static_cast<double>(reconstructed.size());

  std::vector<std::size_t> gt_to_rec(ground_truth.size());
  sum = 0.0;
  hits = 0;
  for (std::size_t j = 0; j < ground_truth.size(); ++j) {
    const Neighbor nb = rec_tree.Nearest(ground_truth.points[j]);
    gt_to_rec[j] = nb.index;
    const double d = std::sqrt(nb.distance_sq);
    sum += d;
    hits += d < threshold ? 1 : 0;
  }
  m.completion = sum / static_cast<double>(ground_truth.size());
  const double recall = static_cast<double>(hits) / static_cast<double>(ground_truth.size());

  m.precision = 100.0 * precision;
  m.recall = 100.0 * recall;
  m.f1 = precision + recall > 0.0 ? 100.0 * 2.0 * precision * recall / (precision + recall) : 0.0;

  const bool normals = reconstructed.normals.size() == reconstructed.size() &&
                       ground_truth.normals.size() == ground_truth.size();
  if (normals) {
    double cos_sum = 0.0;
    for (std::size_t i = 0; i < reconstructed.size(); ++i) {
      const std::size_t j = rec_to_gt[i];
      if (gt_to_rec[j] != i) continue;
      cos_sum += std::abs(reconstructed.normals[i].dot(ground_truth.normals[j]));
      ++m.mutual_pairs;
    }
    if (m.mutual_pairs > 0) {
      m.normal_consistency = 100.0 * cos_sum / static_cast<double>(m.mutual_pairs);
    }
  }
  return m;
}

Segmentation SegmentMap(const GaussianMap& map, std::span<const VecX> class_embeddings) {
  if (class_embeddings.empty()) throw Error("segment: no class embeddings");
  Segmentation out;
  out.classes.reserve(map.size());
  out.low_confidence.reserve(map.size());
  for (const Gaussian& g : map.gaussians()) {
    int best = 0;
    double best_cos = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < class_embeddings.size(); ++c) {
      if (class_embeddings[c].size() != g.feature.size()) {
        throw Error("segment: embedding dimension does not match the map");
      }
      const double cos = g.feature.dot(class_embeddings[c]);
      if (cos > best_cos) {
        best_cos = cos;
        best = static_cast<int>(c);
      }
    }
    out.classes.push_back(best);
    out.low_confidence.push_back(best_cos <= 0.0 ? 1 : 0);
  }
  return out;
}

SegmentationMetrics ScoreSegmentation(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw Error("segmentation metrics: label lists must be non-empty and equally long");
  }
  std::map<int, std::size_t> tp, fp, fn, count;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++count[truth[i]];
    if (predicted[i] == truth[i]) {
      ++tp[truth[i]];
      ++correct;
    } else {
      ++fn[truth[i]];
      ++fp[predicted[i]];
    }
  }
  SegmentationMetrics m;
  const double n = static_cast<double>(truth.size());
  double iou_sum = 0.0;
  double weighted = 0.0;
  for (const auto& [c, cnt] : count) {
    const double t = static_cast<double>(tp[c]);
    const double iou = t / (t + static_cast<double>(fp[c]) + static_cast<double>(fn[c]));
    iou_sum += iou;
    weighted += static_cast<double>(cnt) * iou;
  }
  m.classes = count.size();
  m.miou = 100.0 * iou_sum / static_cast<double>(count.size());
  m.f_miou = 100.0 * weighted / n;
  m.acc = 100.0 * static_cast<double>(correct) / n;
  return m;
}

SegmentationMetrics EvaluateSegmentation(std::span<const Vec3> centers,
                                         std::span<const int> predicted,
                                         const PointCloud& ground_truth) {
  if (ground_truth.labels.size() != ground_truth.size() || ground_truth.empty()) {
    throw Error("segmentation metrics: ground truth has no labels");
  }
  if (centers.size() != predicted.size() || centers.empty()) {
    throw Error("segmentation metrics: need one prediction per center");
  }
  const KdTree tree(ground_truth.points);
  std::vector<int> truth;
  truth.reserve(centers.size());
  for (const Vec3& c : centers) truth.push_back(ground_truth.labels[tree.Nearest(c).index]);
  return ScoreSegmentation(predicted, truth);
}

std::vector<std::string> MetricsReport::Validate() const {
  std::vector<std::string> errors;
  auto percent = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0 && *v <= 100.0)) errors.push_back(std::string(name) + " outside [0, 100]");
  };
  auto distance = [&](const std::optional<double>& v, const char* name) {
    if (v && !(*v >= 0.0)) errors.push_back(std::string(name) + " negative");
  };
  distance(ate_rmse, "ate_rmse");
  distance(accuracy, "accuracy");
  distance(completion, "completion");
  percent(scale_score, "scale_score");
  percent(f1_at_0_2, "f1_at_0_2");
  percent(normal_consistency, "normal_consistency");
  percent(miou, "miou");
  percent(f_miou, "f_miou");
  percent(acc, "acc");
  return errors;
}

namespace {

template <typename F>
void ForEachField(const MetricsReport& r, F&& f) {
  f("ate_rmse", r.ate_rmse, "m");
  f("scale_score", r.scale_score, "%");
  f("accuracy", r.accuracy, "m");
  f("completion", r.completion, "m");
  f("f1_at_0_2", r.f1_at_0_2, "%");
  f("normal_consistency", r.normal_consistency, "%");
  f("miou", r.miou, "%");
  f("f_miou", r.f_miou, "%");
  f("acc", r.acc, "%");
}

}  // namespace

std::string MetricsReport::ToJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  ForEachField(*this, [&](const char* name, const std::optional<double>& v, const char*) {
    if (v) j[name] = *v;
  });
  return j.dump(2);
}

std::string MetricsReport::ToText() const {
  std::ostringstream out;
  out << std::fixed;
  ForEachField(*this, [&](const char* name, const std::optional<double>& v, const char* unit) {
    out << std::left << std::setw(20) << name;
    if (v) {
      out << std::right << std::setw(12) << std::setprecision(std::string(unit) == "m" ? 4 : 2)
          << *v << " " << unit;
    } else {
      out << std::right << std::setw(12) << "-";
    }
    out << "\n";
  });
  return out.str();
}

PointCloud MapCloud(const GaussianMap& map, std::span<const int> labels) {
  PointCloud cloud;
  for (const Gaussian& g : map.gaussians()) {
    cloud.points.push_back(g.mean);
    cloud.normals.push_back(g.normal);
    cloud.colors.push_back(g.color);
  }
  if (labels.size() == map.size()) cloud.labels.assign(labels.begin(), labels.end());
  return cloud;
}

PointCloud DensifyMap(const GaussianMap& map, const Trajectory& trajectory,
                      const CameraIntrinsics& intrinsics, const Config& config) {
  PointCloud cloud;
  const RenderOptions options = RenderOptions::FromConfig(config);
  const int stride = std::max(config.densify_pixel_stride, 1);
  for (const TrajectoryEntry& e : trajectory.entries()) {
    const DepthRender render =
        RenderExpectedDepth(map.gaussians(), e.pose, intrinsics, options, true);
    for (int v = 0; v < render.height; v += stride) {
      for (int u = 0; u < render.width; u += stride) {
        if (!render.Valid(u, v)) continue;
        const std::size_t idx = render.Index(u, v);
        cloud.points.push_back(e.pose * (intrinsics.Backproject(u, v) * render.expected_depth[idx]));
        cloud.normals.push_back(render.expected_normal[idx]);
      }
    }
  }
  return cloud;
}

MetricsReport Evaluate(const GaussianMap& map, const Trajectory& trajectory,
                       const EvaluationInputs& inputs, const Config& config) {
  MetricsReport report;
  if (inputs.ground_truth_trajectory != nullptr) {
    const AteResult ate = AteRmse(trajectory, *inputs.ground_truth_trajectory);
    report.ate_rmse = ate.rmse;
    report.scale_score = ScaleScore(ate.scale);
  }
  if (inputs.ground_truth_cloud != nullptr && !map.empty()) {
    PointCloud rec = MapCloud(map);
    if (config.densify && inputs.intrinsics != nullptr) {
      const PointCloud dense = DensifyMap(map, trajectory, *inputs.intrinsics, config);
      rec.points.insert(rec.points.end(), dense.points.begin(), dense.points.end());
      rec.normals.insert(rec.normals.end(), dense.normals.begin(), dense.normals.end());
      rec.colors.clear();
    }
    const ReconstructionMetrics m =
        EvaluateReconstruction(rec, *inputs.ground_truth_cloud, config.f1_threshold);
    report.accuracy = m.accuracy;
    report.completion = m.completion;
    report.f1_at_0_2 = m.f1;
    report.normal_consistency = m.normal_consistency;
    if (!inputs.class_embeddings.empty() &&
        inputs.ground_truth_cloud->labels.size() == inputs.ground_truth_cloud->size()) {
      const Segmentation seg = SegmentMap(map, inputs.class_embeddings);
      std::vector<Vec3> centers;
      centers.reserve(map.size());
      for (const Gaussian& g : map.gaussians()) centers.push_back(g.mean);
      const SegmentationMetrics s =
          EvaluateSegmentation(centers, seg.classes, *inputs.ground_truth_cloud);
      report.miou = s.miou;
      report.f_miou = s.f_miou;
      report.acc = s.acc;
    }
  }
  return report;
}

}  // namespace gaussfuse
