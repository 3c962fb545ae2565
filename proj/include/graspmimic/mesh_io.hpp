#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "graspmimic/mesh.hpp"
#include "graspmimic/primitives.hpp"

namespace graspmimic {

/// Reads triangles from a Wavefront OBJ. Polygons are fan-triangulated; texture and
/// normal indices, materials and groups are ignored.
inline RawMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mesh file: " + path.string());
  RawMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<std::uint32_t> poly;
      std::string token;
      while (ls >> token) {
        const std::string head = token.substr(0, token.find('/'));
        long idx = 0;
        try {
          idx = std::stol(head);
        } catch (const std::exception&) {
          throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed face");
        }
        const long n = static_cast<long>(mesh.vertices.size());
        const long resolved = idx < 0 ? n + idx : idx - 1;
        if (resolved < 0 || resolved >= n) {
          throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                                ": face index out of range");
        }
        poly.push_back(static_cast<std::uint32_t>(resolved));
      }
      if (poly.size() < 3) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": face with < 3 vertices");
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  if (mesh.vertices.empty() || mesh.faces.empty()) throw ValidationError("empty mesh: " + path.string());
  return mesh;
}

/// Loads an OBJ, drops degenerate faces and draws `sample_count` surface samples.
inline TriMesh load_mesh(const std::filesystem::path& path, std::size_t sample_count,
                         std::uint64_t seed = TriMesh::kDefaultSeed) {
  if (sample_count < 4) throw ValidationError("sample count must be at least 4");
  RawMesh raw = read_obj(path);
  try {
    return TriMesh::from_triangles(std::move(raw.vertices), std::move(raw.faces), sample_count, seed);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

struct ObjGroup {
  std::string name;
  std::span<const Vec3> vertices;
  std::span<const Face> faces;
};

inline void write_obj(std::ostream& out, std::span<const ObjGroup> groups) {
  out.precision(17);
  std::uint32_t offset = 1;
  for (const ObjGroup& g : groups) {
    out << "o " << g.name << '\n';
    for (const Vec3& v : g.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const Face& f : g.faces) {
      out << "f " << f[0] + offset << ' ' << f[1] + offset << ' ' << f[2] + offset << '\n';
    }
    offset += static_cast<std::uint32_t>(g.vertices.size());
  }
}

inline void write_obj(const std::filesystem::path& path, std::span<const Vec3> vertices,
                      std::span<const Face> faces, const std::string& name = "mesh") {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const ObjGroup g{name, vertices, faces};
  write_obj(out, std::span<const ObjGroup>(&g, 1));
}

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

/// Blue (H = 0) to red (H = 1) ramp; channels are floor(255 * x + 0.5).
inline Rgb heat_color(double h) {
  h = std::clamp(h, 0.0, 1.0);
  const auto channel = [](double x) { return static_cast<std::uint8_t>(std::floor(255.0 * x + 0.5)); };
  return {channel(h), 0, channel(1.0 - h)};
}

namespace detail {
template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts not supported");
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.write(bytes, sizeof(T));
}
}  // namespace detail

/// Binary little-endian PLY with float xyz and uchar rgb per vertex plus faces.
inline void write_colored_ply(std::ostream& out, std::span<const Vec3> vertices,
                              std::span<const Face> faces, std::span<const Rgb> colors) {
  if (colors.size() != vertices.size()) throw ValidationError("color count must match vertex count");
  out << "ply\nformat binary_little_endian 1.0\n"
      << "element vertex " << vertices.size() << '\n'
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << faces.size() << '\n'
      << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (int k = 0; k < 3; ++k) detail::put_le(out, static_cast<float>(vertices[i][k]));
    detail::put_le(out, colors[i].r);
    detail::put_le(out, colors[i].g);
    detail::put_le(out, colors[i].b);
  }
  for (const Face& f : faces) {
    detail::put_le(out, static_cast<std::uint8_t>(3));
    for (std::uint32_t idx : f) detail::put_le(out, static_cast<std::int32_t>(idx));
  }
}

inline void write_colored_ply(const std::filesystem::path& path, std::span<const Vec3> vertices,
                              std::span<const Face> faces, std::span<const Rgb> colors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_colored_ply(out, vertices, faces, colors);
}

}  // namespace graspmimic
