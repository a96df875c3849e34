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

#ifndef GAUSSFUSE_SCENE_IO_HPP_
#define GAUSSFUSE_SCENE_IO_HPP_

#include <string>
#include <vector>

#include "gaussfuse/synthetic_source.hpp"

namespace gaussfuse {

struct SceneSpec {
  SyntheticScene scene;
  NoiseModel noise;
};

// Scene JSON: camera, room, boxes, planes, classes, feature_dim, trajectory
// and an optional noise block. See data/room.json.
SceneSpec SceneFromJson(const std::string& text);
SceneSpec LoadScene(const std::string& path);

NoiseModel NoiseModelFromJson(const std::string& text);
std::string NoiseModelToJson(const NoiseModel& noise);

// Class embeddings, one unit vector per line of whitespace-separated values.
std::vector<VecX> LoadEmbeddings(const std::string& path);
void SaveEmbeddings(const std::vector<VecX>& embeddings, const std::string& path);
std::vector<VecX> ClassEmbeddings(const SyntheticScene& scene);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_SCENE_IO_HPP_
