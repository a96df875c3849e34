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

#include "gaussfuse/map_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gaussfuse/metrics.hpp"
#include "gaussfuse/ply.hpp"

namespace gaussfuse {
namespace {

static_assert(std::endian::native == std::endian::little,
              "map archives assume a little-endian host");

constexpr char kMagic[4] = {'G', 'F', 'M', 'A'};
constexpr std::size_t kHeaderSize = 4 + 1 + 4 + 8 + 8;

template <typename T>
void Append(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T Take(const std::string& bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

}  // namespace

std::string EncodeMap(const GaussianMap& map) {
  const auto dim = static_cast<std::uint32_t>(map.feature_dim());
  std::string out;
  out.reserve(kHeaderSize + map.size() * (16 + dim) * sizeof(float));
  out.append(kMagic, 4);
  Append<std::uint8_t>(out, kMapArchiveVersion);
  Append<std::uint32_t>(out, dim);
  Append<std::uint64_t>(out, map.size());
  Append<double>(out, map.voxel_size());
  for (const Gaussian& g : map.gaussians()) {
    auto f = [&](double v) { Append<float>(out, static_cast<float>(v)); };
    for (int k = 0; k < 3; ++k) f(g.mean[k]);
    for (int r = 0; r < 3; ++r) {
      for (int c = r; c < 3; ++c) f(g.covariance(r, c));
    }
    for (int k = 0; k < 3; ++k) f(g.color[k]);
    for (int k = 0; k < 3; ++k) f(g.normal[k]);
    f(g.blend_state);
    for (Eigen::Index d = 0; d < g.feature.size(); ++d) f(g.feature[d]);
  }
  return out;
}

GaussianMap DecodeMap(const std::string& bytes) {
  if (bytes.size() < kHeaderSize) {
    throw Error("map archive: truncated header (" + std::to_string(bytes.size()) + " of " +
                std::to_string(kHeaderSize) + " bytes)");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error("map archive: bad magic at byte 0");
  const auto version = Take<std::uint8_t>(bytes, 4);
  if (version != kMapArchiveVersion) {
    throw Error("map archive: version " + std::to_string(version) + " at byte 4, expected " +
                std::to_string(kMapArchiveVersion));
  }
  const auto dim = Take<std::uint32_t>(bytes, 5);
  const auto count = Take<std::uint64_t>(bytes, 9);
  const auto voxel = Take<double>(bytes, 17);
  const std::size_t record = (16 + static_cast<std::size_t>(dim)) * sizeof(float);
  const std::size_t payload = bytes.size() - kHeaderSize;
  if (payload != count * record) {
    const std::size_t complete = payload / record;
    std::ostringstream ss;
    ss << "map archive: header declares " << count << " records of " << record
       << " bytes but the payload holds " << payload << " bytes; record " << complete
       << " at byte " << kHeaderSize + complete * record << " is "
       << (complete < count ? "truncated" : "followed by trailing data");
    throw Error(ss.str());
  }

  GaussianMap map(voxel, static_cast<int>(dim));
  std::size_t offset = kHeaderSize;
  auto f = [&]() {
    const double v = Take<float>(bytes, offset);
    offset += sizeof(float);
    return v;
  };
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t start = offset;
    Gaussian g;
    for (int k = 0; k < 3; ++k) g.mean[k] = f();
    for (int r = 0; r < 3; ++r) {
      for (int c = r; c < 3; ++c) g.covariance(r, c) = g.covariance(c, r) = f();
    }
    for (int k = 0; k < 3; ++k) g.color[k] = f();
    for (int k = 0; k < 3; ++k) g.normal[k] = f();
    g.blend_state = f();
    g.feature.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) g.feature[d] = f();
    // Unit vectors lose their norm at float precision.
    if (g.normal.norm() > 0.0) g.normal.normalize();
    if (g.feature.norm() > 0.0) g.feature.normalize();
    const char* problem = nullptr;
    if (!g.mean.allFinite() || !g.covariance.allFinite() || !g.feature.allFinite()) {
      problem = "non-finite values";
    } else if (!(g.blend_state > 0.0 && g.blend_state <= 1.0)) {
      problem = "blend state outside (0, 1]";
    } else if ((g.color.array() < 0.0).any() || (g.color.array() > 1.0).any()) {
      problem = "color outside [0, 1]";
    } else if (g.normal.norm() == 0.0) {
      problem = "zero normal";
    }
    if (problem != nullptr) {
      throw Error("map archive: " + std::string(problem) + " in record " + std::to_string(i) +
                  " at byte " + std::to_string(start));
    }
    map.Add(std::move(g));
  }
  return map;
}

void ExportMap(const GaussianMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("map archive: cannot write " + path);
  const std::string bytes = EncodeMap(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("map archive: write failed for " + path);
}

GaussianMap ImportMap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("map archive: cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return DecodeMap(bytes);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

void ExportMapPly(const GaussianMap& map, const std::string& path, std::span<const int> labels) {
  WritePointCloudPly(MapCloud(map, labels), path);
}

}  // namespace gaussfuse
