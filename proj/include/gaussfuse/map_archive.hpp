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

#ifndef GAUSSFUSE_MAP_ARCHIVE_HPP_
#define GAUSSFUSE_MAP_ARCHIVE_HPP_

#include <cstdint>
#include <span>
#include <string>

#include "gaussfuse/gaussian_map.hpp"

namespace gaussfuse {

inline constexpr std::uint8_t kMapArchiveVersion = 1;

// Little-endian layout:
//   "GFMA" | u8 version | u32 feature dim | u64 count | f64 voxel size
//   count x f32[16 + D]: mean(3) cov upper triangle(6) color(3) normal(3)
//                        blend state(1) feature(D)
std::string EncodeMap(const GaussianMap& map);
GaussianMap DecodeMap(const std::string& bytes);

void ExportMap(const GaussianMap& map, const std::string& path);
GaussianMap ImportMap(const std::string& path);

// Means, normals, colors and optional labels as a PLY point set.
void ExportMapPly(const GaussianMap& map, const std::string& path,
                  std::span<const int> labels = {});

}  // namespace gaussfuse

#endif  // GAUSSFUSE_MAP_ARCHIVE_HPP_
