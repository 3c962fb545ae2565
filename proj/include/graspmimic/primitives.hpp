#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "graspmimic/types.hpp"

namespace graspmimic {

/// Vertex and face arrays before sampling; all generators emit outward CCW faces.
struct RawMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  RawMesh& transform(const RigidTransform& tf) {
    for (Vec3& v : vertices) v = tf.apply(v);
    return *this;
  }
  RawMesh& translate(const Vec3& t) {
    for (Vec3& v : vertices) v += t;
    return *this;
  }
  void append(const RawMesh& other) {
    const auto offset = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const Face& f : other.faces) faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
  }
};

inline RawMesh make_box(const Vec3& lo, const Vec3& hi) {
  RawMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  // Two triangles per face, wound so normals point out of the box.
  const std::uint32_t quads[6][4] = {
      {0, 2, 3, 1},  // -z
      {4, 5, 7, 6},  // +z
      {0, 1, 5, 4},  // -y
      {2, 6, 7, 3},  // +y
      {0, 4, 6, 2},  // -x
      {1, 3, 7, 5},  // +x
  };
  for (const auto& q : quads) {
    m.faces.push_back({q[0], q[1], q[2]});
    m.faces.push_back({q[0], q[2], q[3]});
  }
  return m;
}

inline RawMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero()) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  RawMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : m.vertices) v.normalize();
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto [it, inserted] = midpoints.try_emplace({key.first, key.second}, 0u);
      if (inserted) {
        it->second = static_cast<std::uint32_t>(m.vertices.size());
        m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      }
      return it->second;
    };
    std::vector<Face> next;
    next.reserve(m.faces.size() * 4);
    for (const Face& f : m.faces) {
      const std::uint32_t ab = midpoint(f[0], f[1]);
      const std::uint32_t bc = midpoint(f[1], f[2]);
      const std::uint32_t ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (Vec3& v : m.vertices) v = center + radius * v;
  return m;
}

/// Capped cylinder along +z, centered at the origin.
inline RawMesh make_cylinder(double radius, double height, int segments) {
  RawMesh m;
  const double h = height / 2.0;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -h);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), h);
  }
  const auto bottom = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.emplace_back(0, 0, -h);
  m.vertices.emplace_back(0, 0, h);
  const std::uint32_t top = bottom + 1;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.faces.push_back({b0, b1, t1});
    m.faces.push_back({b0, t1, t0});
    m.faces.push_back({bottom, b1, b0});
    m.faces.push_back({top, t0, t1});
  }
  return m;
}

/// Torus around +z with the given major (ring) and minor (tube) radii.
inline RawMesh make_torus(double major, double minor, int ring_segments, int tube_segments) {
  RawMesh m;
  for (int i = 0; i < ring_segments; ++i) {
    const double u = 2.0 * std::numbers::pi * i / ring_segments;
    for (int j = 0; j < tube_segments; ++j) {
      const double v = 2.0 * std::numbers::pi * j / tube_segments;
      const double r = major + minor * std::cos(v);
      m.vertices.emplace_back(r * std::cos(u), r * std::sin(u), minor * std::sin(v));
    }
  }
  const auto R = static_cast<std::uint32_t>(ring_segments);
  const auto T = static_cast<std::uint32_t>(tube_segments);
  for (std::uint32_t i = 0; i < R; ++i) {
    for (std::uint32_t j = 0; j < T; ++j) {
      const std::uint32_t a = i * T + j;
      const std::uint32_t b = ((i + 1) % R) * T + j;
      const std::uint32_t c = ((i + 1) % R) * T + (j + 1) % T;
      const std::uint32_t d = i * T + (j + 1) % T;
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
  return m;
}

}  // namespace graspmimic
