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

#ifndef GAUSSFUSE_PLY_HPP_
#define GAUSSFUSE_PLY_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "gaussfuse/types.hpp"

namespace gaussfuse {

// Scalar properties only; list properties are rejected on read.
enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat32;
  std::vector<double> values;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;

  const PlyProperty* Find(const std::string& property) const;
  const PlyProperty& Get(const std::string& property) const;  // throws if absent
  PlyProperty& Add(const std::string& property, PlyType type);
};

struct PlyFile {
  std::vector<std::string> comments;
  std::vector<PlyElement> elements;

  const PlyElement* Find(const std::string& element) const;
  const PlyElement& Get(const std::string& element) const;  // throws if absent
};

// Always writes binary little-endian; reads binary little-endian or ascii.
void WritePly(const PlyFile& ply, const std::string& path);
PlyFile ReadPly(const std::string& path);

// x y z [nx ny nz] [red green blue] [label] vertices.
void WritePointCloudPly(const PointCloud& cloud, const std::string& path);
PointCloud ReadPointCloudPly(const std::string& path);

}  // namespace gaussfuse

#endif  // GAUSSFUSE_PLY_HPP_
