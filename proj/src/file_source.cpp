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

#include "gaussfuse/file_source.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gaussfuse/ply.hpp"
#include "gaussfuse/trajectory_io.hpp"

namespace gaussfuse {

namespace fs = std::filesystem;
using nlohmann::json;

std::string BundleDirectoryName(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d", frame_id);
  return buf;
}

void WritePredictionBundle(const Prediction& prediction, const std::string& dir,
                           double timestamp) {
  if (!prediction.IsConsistent()) throw Error("bundle: inconsistent prediction");
  fs::create_directories(dir);

  PlyFile ply;
  PlyElement e;
  e.name = "vertex";
  e.count = prediction.PixelCount();
  const char* xyz[3] = {"x", "y", "z"};
  const char* nxyz[3] = {"nx", "ny", "nz"};
  const char* rgb[3] = {"red", "green", "blue"};
  for (int k = 0; k < 3; ++k) {
    PlyProperty& p = e.Add(xyz[k], PlyType::kFloat32);
    for (std::size_t i = 0; i < e.count; ++i) p.values[i] = prediction.points[i][k];
  }
  for (int k = 0; k < 3; ++k) {
    PlyProperty& p = e.Add(nxyz[k], PlyType::kFloat32);
    for (std::size_t i = 0; i < e.count; ++i) p.values[i] = prediction.normals[i][k];
  }
  for (int k = 0; k < 3; ++k) {
    PlyProperty& p = e.Add(rgb[k], PlyType::kUint8);
    for (std::size_t i = 0; i < e.count; ++i) {
      p.values[i] = std::round(std::clamp(prediction.colors[i][k], 0.0, 1.0) * 255.0);
    }
  }
  for (int d = 0; d < prediction.FeatureDim(); ++d) {
    PlyProperty& p = e.Add("f_" + std::to_string(d), PlyType::kFloat32);
    for (std::size_t i = 0; i < e.count; ++i) {
      p.values[i] = prediction.features(d, static_cast<Eigen::Index>(i));
    }
  }
  PlyProperty& valid = e.Add("valid", PlyType::kUint8);
  for (std::size_t i = 0; i < e.count; ++i) valid.values[i] = prediction.valid[i];
  ply.elements.push_back(std::move(e));
  WritePly(ply, (fs::path(dir) / "points.ply").string());

  json meta;
  meta["frame_id"] = prediction.frame_id;
  meta["H"] = prediction.height;
  meta["W"] = prediction.width;
  meta["D"] = prediction.FeatureDim();
  meta["timestamp"] = timestamp;
  meta["intrinsics"] = {{"fx", prediction.intrinsics.fx},
                        {"fy", prediction.intrinsics.fy},
                        {"cx", prediction.intrinsics.cx},
                        {"cy", prediction.intrinsics.cy}};
  const Eigen::Matrix4d m = prediction.pose.Matrix();
  json pose = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
  }
  meta["pose"] = pose;
  std::ofstream out(fs::path(dir) / "meta.json");
  if (!out) throw Error("bundle: cannot write meta.json in " + dir);
  out << meta.dump(2) << "\n";
}

Prediction ReadPredictionBundle(const std::string& dir, double* timestamp) {
  std::ifstream in(fs::path(dir) / "meta.json");
  if (!in) throw Error("bundle: missing meta.json in " + dir);
  json meta;
  try {
    in >> meta;
  } catch (const json::exception& e) {
    throw Error("bundle: bad meta.json in " + dir + ": " + e.what());
  }

  Prediction pred;
  try {
    const int h = meta.at("H").get<int>();
    const int w = meta.at("W").get<int>();
    const int d = meta.at("D").get<int>();
    pred.Resize(h, w, d);
    pred.frame_id = meta.at("frame_id").get<int>();
    const json& k = meta.at("intrinsics");
    pred.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                       k.at("cx").get<double>(), k.at("cy").get<double>(), w, h};
    const json& pose = meta.at("pose");
    if (!pose.is_array() || pose.size() != 16) throw Error("pose must have 16 entries");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m(r, c) = pose[static_cast<std::size_t>(r * 4 + c)].get<double>();
    }
    pred.pose = RigidPose::FromMatrix(m);
    if (timestamp != nullptr) *timestamp = meta.value("timestamp", pred.frame_id / 30.0);
  } catch (const json::exception& e) {
    throw Error("bundle: bad meta.json in " + dir + ": " + e.what());
  }

  const std::string name = "frame " + std::to_string(pred.frame_id);
  const PlyFile ply = ReadPly((fs::path(dir) / "points.ply").string());
  const PlyElement& e = ply.Get("vertex");
  if (e.count != pred.PixelCount()) {
    throw Error("bundle: " + name + " has " + std::to_string(e.count) + " vertices, expected " +
                std::to_string(pred.PixelCount()));
  }
  try {
    const PlyProperty* xyz[3] = {&e.Get("x"), &e.Get("y"), &e.Get("z")};
    const PlyProperty* nxyz[3] = {&e.Get("nx"), &e.Get("ny"), &e.Get("nz")};
    const PlyProperty* rgb[3] = {&e.Get("red"), &e.Get("green"), &e.Get("blue")};
    const PlyProperty& valid = e.Get("valid");
    std::vector<const PlyProperty*> feats;
    for (int d = 0; d < pred.FeatureDim(); ++d) feats.push_back(&e.Get("f_" + std::to_string(d)));
    for (std::size_t i = 0; i < e.count; ++i) {
      pred.valid[i] = valid.values[i] != 0.0 ? 1 : 0;
      for (int k = 0; k < 3; ++k) {
        pred.points[i][k] = xyz[k]->values[i];
        pred.normals[i][k] = nxyz[k]->values[i];
        pred.colors[i][k] = rgb[k]->values[i] / 255.0;
      }
      for (int d = 0; d < pred.FeatureDim(); ++d) {
        pred.features(d, static_cast<Eigen::Index>(i)) = feats[static_cast<std::size_t>(d)]->values[i];
      }
      if (!pred.valid[i]) continue;
      // Stored at float precision; restore unit length.
      if (pred.normals[i].norm() > 0.0) pred.normals[i].normalize();
      auto f = pred.features.col(static_cast<Eigen::Index>(i));
      if (f.norm() > 0.0) f.normalize();
    }
  } catch (const Error& err) {
    throw Error("bundle: " + name + ": " + err.what());
  }
  return pred;
}

FileSource::FileSource(std::string root) : root_(std::move(root)) {
  if (!fs::is_directory(root_)) throw Error("file source: no directory " + root_);
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& dir : dirs) {
    std::ifstream in(dir / "meta.json");
    json meta;
    try {
      in >> meta;
      const int id = meta.at("frame_id").get<int>();
      dirs_[id] = dir.string();
      timestamps_[id] = meta.value("timestamp", id / 30.0);
      if (feature_dim_ == 0) {
        feature_dim_ = meta.at("D").get<int>();
        const json& k = meta.at("intrinsics");
        intrinsics_ = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                       k.at("cx").get<double>(), k.at("cy").get<double>(),
                       meta.at("W").get<int>(), meta.at("H").get<int>()};
      }
    } catch (const json::exception& e) {
      throw Error("file source: bad " + (dir / "meta.json").string() + ": " + e.what());
    }
  }
  if (dirs_.empty()) throw Error("file source: no bundles under " + root_);
  frame_count_ = dirs_.rbegin()->first + 1;

  const fs::path gt = fs::path(root_) / "gt.tum";
  if (fs::exists(gt)) {
    // Ids at 0.1 ms resolution; entries are matched to bundles by timestamp.
    const Trajectory traj = ReadTum(gt.string(), 1e4);
    for (const TrajectoryEntry& entry : traj.entries()) {
      for (const auto& [id, ts] : timestamps_) {
        if (std::abs(ts - entry.timestamp) < 1e-4) ground_truth_[id] = entry.pose;
      }
    }
  }
}

double FileSource::Timestamp(int frame_id) const {
  const auto it = timestamps_.find(frame_id);
  return it != timestamps_.end() ? it->second : frame_id / 30.0;
}

std::optional<RigidPose> FileSource::GroundTruthPose(int frame_id) const {
  const auto it = ground_truth_.find(frame_id);
  if (it == ground_truth_.end()) return std::nullopt;
  return it->second;
}

const Prediction& FileSource::Load(int frame_id) {
  if (auto it = cache_.find(frame_id); it != cache_.end()) return it->second;
  const auto dir = dirs_.find(frame_id);
  if (dir == dirs_.end()) throw Error("file source: missing bundle for frame " + std::to_string(frame_id));
  Prediction pred = ReadPredictionBundle(dir->second);
  if (pred.width != intrinsics_.width || pred.height != intrinsics_.height ||
      pred.FeatureDim() != feature_dim_) {
    throw Error("file source: shape mismatch in bundle for frame " + std::to_string(frame_id));
  }
  return cache_.emplace(frame_id, std::move(pred)).first->second;
}

std::vector<Prediction> FileSource::Infer(std::span<const int> frame_ids,
                                          std::span<const PoseHint> hints) {
  RigidPose to_common = RigidPose::Identity();
  if (!hints.empty()) {
    const Prediction& anchor = Load(hints.front().frame_id);
    to_common = hints.front().pose * anchor.pose.Inverse();
  }
  std::vector<Prediction> out;
  out.reserve(frame_ids.size());
  for (int f : frame_ids) out.push_back(Load(f).Transformed(to_common));
  return out;
}

}  // namespace gaussfuse
