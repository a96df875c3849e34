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

#include "gaussfuse/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <type_traits>

#include <nlohmann/json.hpp>

#include "gaussfuse/types.hpp"

namespace gaussfuse {
namespace {

using nlohmann::json;

// Single table of (key, member) pairs drives both directions.
template <typename Fn>
void VisitFields(Config& c, Fn&& fn) {
  fn("buffer_size", c.buffer_size);
  fn("lambda", c.lambda);
  fn("tau_normal", c.tau_normal);
  fn("tau_sigma", c.tau_sigma);
  fn("k_neighbors", c.k_neighbors);
  fn("kappa_normal", c.kappa_normal);
  fn("kappa_feature", c.kappa_feature);
  fn("tau_pi", c.tau_pi);
  fn("k_2d", c.k_2d);
  fn("tau_sigma_2d", c.tau_sigma_2d);
  fn("covariance_neighbors", c.covariance_neighbors);
  fn("covariance_floor", c.covariance_floor);
  fn("kernel_squared_distance", c.kernel_squared_distance);
  fn("kmeans_max_iterations", c.kmeans_max_iterations);
  fn("kmeans_tolerance", c.kmeans_tolerance);
  fn("voxel_size", c.voxel_size);
  fn("submap_margin", c.submap_margin);
  fn("icp_max_iterations", c.icp_max_iterations);
  fn("icp_tolerance", c.icp_tolerance);
  fn("icp_gate_factor", c.icp_gate_factor);
  fn("colored_icp_geometric_weight", c.colored_icp_geometric_weight);
  fn("color_gradient_neighbors", c.color_gradient_neighbors);
  fn("icp_source_stride", c.icp_source_stride);
  fn("icp_plane_sigma", c.icp_plane_sigma);
  fn("icp_min_normal_cos", c.icp_min_normal_cos);
  fn("icp_robust_k", c.icp_robust_k);
  fn("icp_robust_scale_min", c.icp_robust_scale_min);
  fn("icp_robust_color_scale_min", c.icp_robust_color_scale_min);
  fn("coarse_use_pair_weights", c.coarse_use_pair_weights);
  fn("delta_min", c.delta_min);
  fn("responsibility_min", c.responsibility_min);
  fn("opacity", c.opacity);
  fn("alpha_valid", c.alpha_valid);
  fn("near_plane", c.near_plane);
  fn("cov2d_floor", c.cov2d_floor);
  fn("cull_margin", c.cull_margin);
  fn("tile_size", c.tile_size);
  fn("frame_stride", c.frame_stride);
  fn("seed", c.seed);
  fn("f1_threshold", c.f1_threshold);
  fn("densify", c.densify);
  fn("densify_pixel_stride", c.densify_pixel_stride);
}

}  // namespace

std::vector<std::string> Config::Validate() const {
  std::vector<std::string> errors;
  auto require = [&errors](bool ok, const char* what) {
    if (!ok) errors.emplace_back(what);
  };
  Config copy = *this;
  VisitFields(copy, [&errors](const char* key, auto& value) {
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(value)>>) {
      if (!std::isfinite(value)) errors.push_back(std::string(key) + " is not finite");
    }
  });
  require(buffer_size >= 1, "buffer_size must be >= 1");
  require(k_neighbors >= 1, "k_neighbors must be >= 1");
  require(k_2d >= 1, "k_2d must be >= 1");
  require(covariance_neighbors >= 4, "covariance_neighbors must be >= 4");
  require(lambda > 0.0, "lambda must be > 0");
  require(covariance_floor > 0.0, "covariance_floor must be > 0");
  require(voxel_size > 0.0, "voxel_size must be > 0");
  require(submap_margin >= 0.0, "submap_margin must be >= 0");
  require(icp_max_iterations >= 1, "icp_max_iterations must be >= 1");
  require(icp_gate_factor > 0.0, "icp_gate_factor must be > 0");
  require(colored_icp_geometric_weight > 0.0 && colored_icp_geometric_weight <= 1.0,
          "colored_icp_geometric_weight must be in (0, 1]");
  require(color_gradient_neighbors >= 3, "color_gradient_neighbors must be >= 3");
  require(icp_source_stride >= 1, "icp_source_stride must be >= 1");
  require(delta_min > 0.0 && delta_min <= 1.0, "delta_min must be in (0, 1]");
  require(opacity > 0.0 && opacity <= 1.0, "opacity must be in (0, 1]");
  require(alpha_valid > 0.0 && alpha_valid <= 1.0, "alpha_valid must be in (0, 1]");
  require(tile_size >= 1, "tile_size must be >= 1");
  require(frame_stride >= 1, "frame_stride must be >= 1");
  require(kmeans_max_iterations >= 1, "kmeans_max_iterations must be >= 1");
  require(densify_pixel_stride >= 1, "densify_pixel_stride must be >= 1");
  require(tau_normal >= -1.0 && tau_normal <= 1.0, "tau_normal must be in [-1, 1]");
  require(tau_sigma > 0.0, "tau_sigma must be > 0");
  require(tau_pi > 0.0, "tau_pi must be > 0");
  require(tau_sigma_2d > 0.0, "tau_sigma_2d must be > 0");
  require(kappa_normal >= 0.0, "kappa_normal must be >= 0");
  require(kappa_feature >= 0.0, "kappa_feature must be >= 0");
  require(responsibility_min >= 0.0 && responsibility_min < 1.0,
          "responsibility_min must be in [0, 1)");
  require(icp_tolerance > 0.0, "icp_tolerance must be > 0");
  require(icp_robust_k >= 0.0, "icp_robust_k must be >= 0");
  require(icp_robust_scale_min > 0.0, "icp_robust_scale_min must be > 0");
  require(icp_robust_color_scale_min > 0.0, "icp_robust_color_scale_min must be > 0");
  require(icp_min_normal_cos >= -1.0 && icp_min_normal_cos <= 1.0,
          "icp_min_normal_cos must be in [-1, 1]");
  require(near_plane > 0.0, "near_plane must be > 0");
  require(cull_margin >= 0.0, "cull_margin must be >= 0");
  require(cov2d_floor > 0.0, "cov2d_floor must be > 0");
  require(f1_threshold > 0.0, "f1_threshold must be > 0");
  return errors;
}

std::string ConfigToJson(const Config& config) {
  json j;
  Config copy = config;
  VisitFields(copy, [&j](const char* key, auto& value) { j[key] = value; });
  return j.dump(2);
}

Config ConfigFromJson(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error("config: top-level value must be an object");
  Config config;
  VisitFields(config, [&j](const char* key, auto& value) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        it->get_to(value);
      } catch (const json::exception& e) {
        throw Error(std::string("config: bad value for '") + key + "': " + e.what());
      }
    }
  });
  // Unknown keys are most likely typos.
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    VisitFields(config, [&](const char* key, auto&) { known |= it.key() == key; });
    if (!known) throw Error("config: unknown key '" + it.key() + "'");
  }
  if (auto errors = config.Validate(); !errors.empty()) {
    throw Error("config: " + errors.front());
  }
  return config;
}

Config LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ConfigFromJson(ss.str());
}

void SaveConfig(const Config& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("config: cannot write " + path);
  out << ConfigToJson(config) << "\n";
}

}  // namespace gaussfuse
