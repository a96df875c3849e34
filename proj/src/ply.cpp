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

#include "gaussfuse/ply.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace gaussfuse {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

struct TypeInfo {
  PlyType type;
  const char* name;
  const char* alias;
  std::size_t size;
};

constexpr TypeInfo kTypes[] = {
    {PlyType::kInt8, "char", "int8", 1},       {PlyType::kUint8, "uchar", "uint8", 1},
    {PlyType::kInt16, "short", "int16", 2},    {PlyType::kUint16, "ushort", "uint16", 2},
    {PlyType::kInt32, "int", "int32", 4},      {PlyType::kUint32, "uint", "uint32", 4},
    {PlyType::kFloat32, "float", "float32", 4}, {PlyType::kFloat64, "double", "float64", 8},
};

const TypeInfo& Info(PlyType type) {
  for (const TypeInfo& t : kTypes) {
    if (t.type == type) return t;
  }
  throw Error("ply: bad type");
}

PlyType ParseType(const std::string& name, const std::string& path) {
  for (const TypeInfo& t : kTypes) {
    if (name == t.name || name == t.alias) return t.type;
  }
  throw Error("ply: unknown property type '" + name + "' in " + path);
}

template <typename T>
void Put(std::ostream& out, double v) {
  T x;
  if constexpr (std::is_floating_point_v<T>) {
    x = static_cast<T>(v);
  } else {
    x = static_cast<T>(std::llround(v));
  }
  out.write(reinterpret_cast<const char*>(&x), sizeof(T));
}

void WriteValue(std::ostream& out, PlyType type, double v) {
  switch (type) {
    case PlyType::kInt8: Put<std::int8_t>(out, v); break;
    case PlyType::kUint8: Put<std::uint8_t>(out, v); break;
    case PlyType::kInt16: Put<std::int16_t>(out, v); break;
    case PlyType::kUint16: Put<std::uint16_t>(out, v); break;
    case PlyType::kInt32: Put<std::int32_t>(out, v); break;
    case PlyType::kUint32: Put<std::uint32_t>(out, v); break;
    case PlyType::kFloat32: Put<float>(out, v); break;
    case PlyType::kFloat64: Put<double>(out, v); break;
  }
}

template <typename T>
double Get(const char* p) {
  T x;
  std::memcpy(&x, p, sizeof(T));
  return static_cast<double>(x);
}

double ReadValue(const char* p, PlyType type) {
  switch (type) {
    case PlyType::kInt8: return Get<std::int8_t>(p);
    case PlyType::kUint8: return Get<std::uint8_t>(p);
    case PlyType::kInt16: return Get<std::int16_t>(p);
    case PlyType::kUint16: return Get<std::uint16_t>(p);
    case PlyType::kInt32: return Get<std::int32_t>(p);
    case PlyType::kUint32: return Get<std::uint32_t>(p);
    case PlyType::kFloat32: return Get<float>(p);
    case PlyType::kFloat64: return Get<double>(p);
  }
  return 0.0;
}

}  // namespace

const PlyProperty* PlyElement::Find(const std::string& property) const {
  for (const PlyProperty& p : properties) {
    if (p.name == property) return &p;
  }
  return nullptr;
}

const PlyProperty& PlyElement::Get(const std::string& property) const {
  const PlyProperty* p = Find(property);
  if (p == nullptr) throw Error("ply: element '" + name + "' has no property '" + property + "'");
  return *p;
}

PlyProperty& PlyElement::Add(const std::string& property, PlyType type) {
  properties.push_back({property, type, std::vector<double>(count, 0.0)});
  return properties.back();
}

const PlyElement* PlyFile::Find(const std::string& element) const {
  for (const PlyElement& e : elements) {
    if (e.name == element) return &e;
  }
  return nullptr;
}

const PlyElement& PlyFile::Get(const std::string& element) const {
  const PlyElement* e = Find(element);
  if (e == nullptr) throw Error("ply: no element '" + element + "'");
  return *e;
}

void WritePly(const PlyFile& ply, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("ply: cannot write " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  for (const std::string& c : ply.comments) out << "comment " << c << "\n";
  for (const PlyElement& e : ply.elements) {
    out << "element " << e.name << " " << e.count << "\n";
    for (const PlyProperty& p : e.properties) {
      if (p.values.size() != e.count) {
        throw Error("ply: property '" + p.name + "' has the wrong number of values");
      }
      out << "property " << Info(p.type).name << " " << p.name << "\n";
    }
  }
  out << "end_header\n";
  for (const PlyElement& e : ply.elements) {
    for (std::size_t i = 0; i < e.count; ++i) {
      for (const PlyProperty& p : e.properties) WriteValue(out, p.type, p.values[i]);
    }
  }
  if (!out) throw Error("ply: write failed for " + path);
}

PlyFile ReadPly(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("ply: cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line != "ply" && line != "ply\r") throw Error("ply: missing magic in " + path);

  PlyFile ply;
  bool ascii = false;
  for (;;) {
    if (!std::getline(in, line)) throw Error("ply: truncated header in " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "end_header") break;
    if (key == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") {
        ascii = true;
      } else if (fmt != "binary_little_endian") {
        throw Error("ply: unsupported format '" + fmt + "' in " + path);
      }
    } else if (key == "comment" || key == "obj_info") {
      ply.comments.push_back(line.size() > key.size() + 1 ? line.substr(key.size() + 1) : "");
    } else if (key == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      if (!ss) throw Error("ply: bad element line in " + path);
      ply.elements.push_back(std::move(e));
    } else if (key == "property") {
      if (ply.elements.empty()) throw Error("ply: property before element in " + path);
      std::string type;
      std::string name;
      ss >> type;
      if (type == "list") throw Error("ply: list properties are not supported in " + path);
      ss >> name;
      PlyProperty p{name, ParseType(type, path), {}};
      ply.elements.back().properties.push_back(std::move(p));
    } else if (!key.empty()) {
      throw Error("ply: unexpected header line '" + line + "' in " + path);
    }
  }

  for (PlyElement& e : ply.elements) {
    for (PlyProperty& p : e.properties) p.values.resize(e.count);
    if (ascii) {
      for (std::size_t i = 0; i < e.count; ++i) {
        for (PlyProperty& p : e.properties) {
          if (!(in >> p.values[i])) {
            throw Error("ply: truncated data in " + path + " at element '" + e.name +
                        "' row " + std::to_string(i));
          }
        }
      }
      continue;
    }
    std::size_t stride = 0;
    for (const PlyProperty& p : e.properties) stride += Info(p.type).size;
    std::vector<char> row(stride);
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!in.read(row.data(), static_cast<std::streamsize>(stride))) {
        throw Error("ply: truncated data in " + path + " at element '" + e.name + "' row " +
                    std::to_string(i));
      }
      std::size_t offset = 0;
      for (PlyProperty& p : e.properties) {
        p.values[i] = ReadValue(row.data() + offset, p.type);
        offset += Info(p.type).size;
      }
    }
  }
  return ply;
}

void WritePointCloudPly(const PointCloud& cloud, const std::string& path) {
  PlyFile ply;
  PlyElement e;
  e.name = "vertex";
  e.count = cloud.size();
  auto add_vec = [&](const std::vector<Vec3>& values, const char* a, const char* b,
                     const char* c, PlyType type, double scale) {
    if (values.size() != cloud.size()) return;
    const char* names[3] = {a, b, c};
    for (int k = 0; k < 3; ++k) {
      PlyProperty& p = e.Add(names[k], type);
      for (std::size_t i = 0; i < values.size(); ++i) {
        p.values[i] = type == PlyType::kUint8
                          ? std::clamp(std::round(values[i][k] * scale), 0.0, 255.0)
                          : values[i][k];
      }
    }
  };
  add_vec(cloud.points, "x", "y", "z", PlyType::kFloat32, 1.0);
  add_vec(cloud.normals, "nx", "ny", "nz", PlyType::kFloat32, 1.0);
  add_vec(cloud.colors, "red", "green", "blue", PlyType::kUint8, 255.0);
  if (cloud.labels.size() == cloud.size() && !cloud.empty()) {
    PlyProperty& p = e.Add("label", PlyType::kInt32);
    for (std::size_t i = 0; i < cloud.size(); ++i) p.values[i] = cloud.labels[i];
  }
  ply.elements.push_back(std::move(e));
  WritePly(ply, path);
}

PointCloud ReadPointCloudPly(const std::string& path) {
  const PlyFile ply = ReadPly(path);
  const PlyElement& e = ply.Get("vertex");
  PointCloud cloud;
  auto read_vec = [&](std::vector<Vec3>& out, const char* a, const char* b, const char* c,
                      double scale) {
    const PlyProperty* pa = e.Find(a);
    const PlyProperty* pb = e.Find(b);
    const PlyProperty* pc = e.Find(c);
    if (pa == nullptr || pb == nullptr || pc == nullptr) return false;
    out.resize(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      out[i] = Vec3(pa->values[i], pb->values[i], pc->values[i]) * scale;
    }
    return true;
  };
  if (!read_vec(cloud.points, "x", "y", "z", 1.0)) {
    throw Error("ply: " + path + " has no x/y/z vertex properties");
  }
  read_vec(cloud.normals, "nx", "ny", "nz", 1.0);
  read_vec(cloud.colors, "red", "green", "blue", 1.0 / 255.0);
  if (const PlyProperty* p = e.Find("label")) {
    cloud.labels.reserve(e.count);
    for (double v : p->values) cloud.labels.push_back(static_cast<int>(v));
  }
  return cloud;
}

}  // namespace gaussfuse
