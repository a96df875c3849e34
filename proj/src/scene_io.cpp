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

#include "gaussfuse/scene_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gaussfuse {

using nlohmann::json;

namespace {

Vec3 ToVec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("scene: expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Name -> member table shared by the reader and the writer.
template <typename F>
void VisitNoise(NoiseModel& n, F&& f) {
  f("depth_sigma", n.depth_sigma);
  f("depth_sigma_relative", n.depth_sigma_relative);
  f("scale_sigma", n.scale_sigma);
  f("scale_bias", n.scale_bias);
  f("warp_amplitude", n.warp_amplitude);
  f("warp_wavelength", n.warp_wavelength);
  f("pose_sigma_rot_deg", n.pose_sigma_rot_deg);
  f("pose_sigma_t", n.pose_sigma_t);
  f("feature_sigma", n.feature_sigma);
  f("jitter_sigma", n.jitter_sigma);
  f("jitter_wavelength", n.jitter_wavelength);
  f("normal_sigma_deg", n.normal_sigma_deg);
}

NoiseModel NoiseFromJsonObject(const json& j) {
  if (!j.is_object()) throw Error("noise: expected an object");
  NoiseModel n;
  std::size_t known = 0;
  VisitNoise(n, [&](const char* name, double& value) {
    if (j.contains(name)) {
      value = j.at(name).get<double>();
      ++known;
    }
  });
  if (known != j.size()) {
    for (const auto& [key, value] : j.items()) {
      bool found = false;
      VisitNoise(n, [&](const char* name, double&) { found = found || key == name; });
      if (!found) throw Error("noise: unknown key '" + key + "'");
    }
  }
  if (const auto errors = n.Validate(); !errors.empty()) throw Error("noise: " + errors.front());
  return n;
}

}  // namespace

NoiseModel NoiseModelFromJson(const std::string& text) {
  try {
    return NoiseFromJsonObject(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(std::string("noise: ") + e.what());
  }
}

std::string NoiseModelToJson(const NoiseModel& noise) {
  NoiseModel copy = noise;
  nlohmann::ordered_json j;
  VisitNoise(copy, [&](const char* name, double& value) { j[name] = value; });
  return j.dump(2);
}

SceneSpec SceneFromJson(const std::string& text) {
  SceneSpec spec;
  SyntheticScene& scene = spec.scene;
  try {
    const json j = json::parse(text);
    const json& cam = j.at("camera");
    scene.intrinsics = {cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                        cam.at("cx").get<double>(), cam.at("cy").get<double>(),
                        cam.value("width", 160), cam.value("height", 120)};
    scene.fps = j.value("fps", 30.0);
    scene.max_depth = j.value("max_depth", 20.0);
    if (j.contains("light_direction")) {
      scene.light_direction = ToVec3(j.at("light_direction")).normalized();
    }

    int max_label = -1;
    if (j.contains("room")) {
      const json& room = j.at("room");
      std::vector<int> labels = room.value("labels", std::vector<int>{0});
      std::vector<Vec3> albedos;
      if (room.contains("albedos")) {
        for (const json& a : room.at("albedos")) albedos.push_back(ToVec3(a));
      }
      scene.AddRoom(ToVec3(room.at("min")), ToVec3(room.at("max")), labels, albedos,
                    room.value("checker_size", 0.25));
    }
    for (const json& b : j.value("boxes", json::array())) {
      scene.AddBox(ToVec3(b.at("min")), ToVec3(b.at("max")), ToVec3(b.at("albedo")),
                   b.at("label").get<int>(), b.value("checker_size", 0.25));
    }
    for (const json& p : j.value("planes", json::array())) {
      scene.patches.push_back({ToVec3(p.at("origin")), ToVec3(p.at("u")), ToVec3(p.at("v")),
                               ToVec3(p.at("albedo")), p.value("checker_size", 0.25),
                               p.at("label").get<int>()});
    }
    for (const SurfacePatch& p : scene.patches) {
      if (p.label < 0) throw Error("scene: negative label");
      max_label = std::max(max_label, p.label);
    }

    scene.class_names = j.value("classes", std::vector<std::string>{});
    const int classes = std::max(static_cast<int>(scene.class_names.size()), max_label + 1);
    while (static_cast<int>(scene.class_names.size()) < classes) {
      scene.class_names.push_back("class_" + std::to_string(scene.class_names.size()));
    }
    scene.MakeClassFeatures(std::max(classes, 1), j.value("feature_dim", 16),
                            j.value("feature_seed", 0ULL));

    const json& traj = j.at("trajectory");
    const std::string type = traj.value("type", "orbit");
    if (type == "orbit") {
      scene.trajectory = OrbitTrajectory(ToVec3(traj.at("center")), traj.at("radius").get<double>(),
                                         traj.value("height", 0.0), ToVec3(traj.at("target")),
                                         traj.value("start_deg", 0.0),
                                         traj.value("sweep_deg", 360.0),
                                         traj.at("frames").get<int>());
    } else if (type == "poses") {
      for (const json& pose : traj.at("poses")) {
        if (!pose.is_array() || pose.size() != 16) throw Error("scene: poses need 16 entries");
        Eigen::Matrix4d m;
        for (int r = 0; r < 4; ++r) {
          for (int c = 0; c < 4; ++c) m(r, c) = pose[static_cast<std::size_t>(r * 4 + c)].get<double>();
        }
        scene.trajectory.push_back(RigidPose::FromMatrix(m));
      }
    } else {
      throw Error("scene: unknown trajectory type '" + type + "'");
    }
    if (j.contains("noise")) spec.noise = NoiseFromJsonObject(j.at("noise"));
  } catch (const json::exception& e) {
    throw Error(std::string("scene: ") + e.what());
  }
  if (!scene.intrinsics.IsValid()) throw Error("scene: invalid camera intrinsics");
  return spec;
}

SceneSpec LoadScene(const std::string& path) {
  try {
    return SceneFromJson(ReadFile(path));
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<VecX> LoadEmbeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<VecX> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (values.empty()) continue;
    VecX e = Eigen::Map<VecX>(values.data(), static_cast<Eigen::Index>(values.size()));
    if (!out.empty() && e.size() != out.front().size()) {
      throw Error(path + ": embeddings of different dimensions");
    }
    if (e.norm() == 0.0) throw Error(path + ": zero embedding");
    out.push_back(e.normalized());
  }
  if (out.empty()) throw Error(path + ": no embeddings");
  return out;
}

void SaveEmbeddings(const std::vector<VecX>& embeddings, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  for (const VecX& e : embeddings) {
    for (Eigen::Index i = 0; i < e.size(); ++i) out << (i ? " " : "") << e[i];
    out << "\n";
  }
}

std::vector<VecX> ClassEmbeddings(const SyntheticScene& scene) {
  std::vector<VecX> out;
  for (Eigen::Index c = 0; c < scene.class_features.cols(); ++c) {
    out.push_back(scene.class_features.col(c));
  }
  return out;
}

}  // namespace gaussfuse
