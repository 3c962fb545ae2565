#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "graspmimic/kdtree.hpp"
#include "graspmimic/random.hpp"
#include "graspmimic/types.hpp"
#include "graspmimic/winding.hpp"

namespace graspmimic {

/// Points on a mesh surface with their unit normals and the faces they came from.
struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> faces;

  std::size_t size() const { return points.size(); }
};

inline Vec3 face_area_vector(std::span<const Vec3> vertices, const Face& f) {
  return 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
}

/// Area-weighted uniform surface sampling (deterministic for a given seed).
/// Sample normals are the flat normal of the face the sample lies on.
inline SurfaceSamples sample_surface(std::span<const Vec3> vertices, std::span<const Face> faces,
                                     std::size_t count, std::uint64_t seed) {
  std::vector<double> cdf(faces.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    acc += face_area_vector(vertices, faces[i]).norm();
    cdf[i] = acc;
  }
  SurfaceSamples out;
  out.points.reserve(count);
  out.normals.reserve(count);
  out.faces.reserve(count);
  Rng rng(seed);
  for (std::size_t s = 0; s < count; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto fi = static_cast<std::uint32_t>(it - cdf.begin());
    const Face& f = faces[fi];
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const Vec3 p = (1.0 - r1) * vertices[f[0]] + r1 * (1.0 - r2) * vertices[f[1]] +
                   r1 * r2 * vertices[f[2]];
    out.points.push_back(p);
    out.normals.push_back(face_area_vector(vertices, f).normalized());
    out.faces.push_back(fi);
  }
  return out;
}

/// Indexed triangle mesh with a surface sample set, a nearest-sample index and a
/// winding-number evaluator. Immutable after construction.
class TriMesh {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5eed;

  TriMesh() = default;

  /// Cleans degenerate faces, then samples `sample_count` surface points.
  static TriMesh from_triangles(std::vector<Vec3> vertices, std::vector<Face> faces,
                                std::size_t sample_count, std::uint64_t seed = kDefaultSeed) {
    validate_and_clean(vertices, faces);
    SurfaceSamples samples = sample_surface(vertices, faces, sample_count, seed);
    return TriMesh(std::move(vertices), std::move(faces), std::move(samples));
  }

  /// Uses a caller-provided sample set verbatim (e.g. already posed samples).
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces, SurfaceSamples samples)
      : data_(std::make_shared<Data>()) {
    data_->vertices = std::move(vertices);
    data_->faces = std::move(faces);
    data_->samples = std::move(samples);
    finalize();
  }

  const std::vector<Vec3>& vertices() const { return data_->vertices; }
  const std::vector<Face>& faces() const { return data_->faces; }
  const std::vector<Vec3>& vertex_normals() const { return data_->vertex_normals; }
  const SurfaceSamples& samples() const { return data_->samples; }
  const std::vector<Vec3>& sample_points() const { return data_->samples.points; }
  const std::vector<Vec3>& sample_normals() const { return data_->samples.normals; }
  const KdTree& index() const { return data_->index; }
  const WindingTree& winding() const { return data_->winding; }
  const Aabb& bounds() const { return data_->bounds; }
  double area() const { return data_->area; }
  bool empty() const { return !data_ || data_->faces.empty(); }

  /// Enclosed volume for a closed, outward-oriented mesh.
  double volume() const {
    double v = 0.0;
    for (const Face& f : faces()) {
      v += vertices()[f[0]].dot(vertices()[f[1]].cross(vertices()[f[2]]));
    }
    return v / 6.0;
  }

  /// Volume centroid for closed meshes; falls back to the surface centroid.
  Vec3 centroid() const {
    double v = 0.0;
    Vec3 c = Vec3::Zero();
    for (const Face& f : faces()) {
      const Vec3& a = vertices()[f[0]];
      const Vec3& b = vertices()[f[1]];
      const Vec3& d = vertices()[f[2]];
      const double tv = a.dot(b.cross(d)) / 6.0;
      v += tv;
      c += tv * (a + b + d) / 4.0;
    }
    if (std::abs(v) > 1e-15) return c / v;
    Vec3 s = Vec3::Zero();
    double total = 0.0;
    for (const Face& f : faces()) {
      const double a = face_area_vector(vertices(), f).norm();
      s += a * (vertices()[f[0]] + vertices()[f[1]] + vertices()[f[2]]) / 3.0;
      total += a;
    }
    return s / total;
  }

  double nearest_distance(const Vec3& p) const { return index().nearest(p).distance(); }
  NearestHit nearest_point(const Vec3& p) const { return index().nearest(p); }

  double winding_number(const Vec3& p) const { return winding_number_exact(p, vertices(), faces()); }

  /// Strict interior test using the hierarchical evaluator (winding > 0.5).
  bool contains(const Vec3& p) const {
    if (!bounds().contains(p)) return false;
    return winding().evaluate(p) > 0.5;
  }

  TriMesh transformed(const RigidTransform& tf) const {
    std::vector<Vec3> verts;
    verts.reserve(vertices().size());
    for (const Vec3& v : vertices()) verts.push_back(tf.apply(v));
    SurfaceSamples s = samples();
    for (Vec3& p : s.points) p = tf.apply(p);
    for (Vec3& n : s.normals) n = tf.apply_vector(n);
    return TriMesh(std::move(verts), faces(), std::move(s));
  }

  /// Drops zero-area faces; throws on empty, non-finite or out-of-range input.
  static void validate_and_clean(std::vector<Vec3>& vertices, std::vector<Face>& faces) {
    if (vertices.empty() || faces.empty()) throw ValidationError("empty mesh");
    Aabb box;
    for (const Vec3& v : vertices) {
      if (!v.allFinite()) throw ValidationError("mesh has non-finite vertex coordinates");
      box.extend(v);
    }
    const double scale = box.extent().squaredNorm();
    std::vector<Face> kept;
    kept.reserve(faces.size());
    for (const Face& f : faces) {
      for (std::uint32_t idx : f) {
        if (idx >= vertices.size()) throw ValidationError("face index out of range");
      }
      if (face_area_vector(vertices, f).norm() > 1e-14 * scale) kept.push_back(f);
    }
    if (kept.empty()) throw ValidationError("mesh has zero total area");
    faces = std::move(kept);
  }

 private:
  struct Data {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    std::vector<Vec3> vertex_normals;
    SurfaceSamples samples;
    KdTree index;
    WindingTree winding;
    Aabb bounds;
    double area = 0.0;
  };

  void finalize() {
    Data& d = *data_;
    d.vertex_normals.assign(d.vertices.size(), Vec3::Zero());
    d.area = 0.0;
    for (const Face& f : d.faces) {
      const Vec3 av = face_area_vector(d.vertices, f);
      d.area += av.norm();
      for (std::uint32_t v : f) d.vertex_normals[v] += av;
    }
    for (Vec3& n : d.vertex_normals) {
      const double len = n.norm();
      n = len > 0.0 ? Vec3(n / len) : Vec3(0.0, 0.0, 1.0);
    }
    for (const Vec3& v : d.vertices) d.bounds.extend(v);
    d.index = KdTree(d.samples.points);
    d.winding = WindingTree(d.vertices, d.faces);
  }

  // Shared so copies of a mesh (e.g. inside documents or models) stay cheap.
  std::shared_ptr<Data> data_;
};

/// Merges meshes into one, concatenating vertices, faces and samples in order.
inline TriMesh merge_meshes(std::span<const TriMesh> parts) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  SurfaceSamples samples;
  for (const TriMesh& m : parts) {
    const auto offset = static_cast<std::uint32_t>(verts.size());
    const auto face_offset = static_cast<std::uint32_t>(faces.size());
    verts.insert(verts.end(), m.vertices().begin(), m.vertices().end());
    for (const Face& f : m.faces()) faces.push_back({f[0] + offset, f[1] + offset, f[2] + offset});
    samples.points.insert(samples.points.end(), m.sample_points().begin(), m.sample_points().end());
    samples.normals.insert(samples.normals.end(), m.sample_normals().begin(), m.sample_normals().end());
    for (std::uint32_t fi : m.samples().faces) samples.faces.push_back(fi + face_offset);
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(samples));
}

}  // namespace graspmimic
