#pragma once

#include <cstdint>
#include <vector>

#include "graspmimic/mesh.hpp"
#include "graspmimic/random.hpp"

namespace graspmimic {

inline double nearest_distance(const Vec3& p, const TriMesh& mesh) { return mesh.nearest_distance(p); }
inline NearestHit nearest_point(const Vec3& p, const TriMesh& mesh) { return mesh.nearest_point(p); }
inline double winding_number(const Vec3& p, const TriMesh& mesh) { return mesh.winding_number(p); }

/// Sample indices of each mesh found inside the other.
struct PenetrationSets {
  std::vector<std::uint32_t> inside_object;   // gripper samples inside the object
  std::vector<std::uint32_t> inside_gripper;  // object samples inside the gripper

  bool empty() const { return inside_object.empty() && inside_gripper.empty(); }
  bool operator==(const PenetrationSets&) const = default;
};

inline std::vector<std::uint32_t> samples_inside(const TriMesh& samples_of, const TriMesh& volume) {
  std::vector<std::uint32_t> out;
  const auto& pts = samples_of.sample_points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (volume.contains(pts[i])) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

inline PenetrationSets penetration_sets(const TriMesh& gripper, const TriMesh& object) {
  return {samples_inside(gripper, object), samples_inside(object, gripper)};
}

/// Monte Carlo volume of the intersection of two closed meshes, sampled uniformly in
/// the intersection of their bounding boxes.
struct VolumeEstimate {
  double volume = 0.0;
  double standard_error = 0.0;
};

inline VolumeEstimate penetration_volume_estimate(const TriMesh& a, const TriMesh& b,
                                                  std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 1000) throw ValidationError("penetration volume needs at least 1000 samples");
  const Aabb box = Aabb::intersection(a.bounds(), b.bounds());
  if (box.empty() || box.volume() <= 0.0) return {};
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const double x = rng.uniform(box.lo.x(), box.hi.x());
    const double y = rng.uniform(box.lo.y(), box.hi.y());
    const double z = rng.uniform(box.lo.z(), box.hi.z());
    const Vec3 p(x, y, z);
    if (a.contains(p) && b.contains(p)) ++hits;
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(sample_count);
  const double v = box.volume();
  return {frac * v, v * std::sqrt(frac * (1.0 - frac) / static_cast<double>(sample_count))};
}

inline double penetration_volume(const TriMesh& a, const TriMesh& b, std::size_t sample_count,
                                 std::uint64_t seed) {
  return penetration_volume_estimate(a, b, sample_count, seed).volume;
}

/// Largest distance from a gripper sample inside the object to the object's samples.
inline double max_penetration_depth(const TriMesh& gripper, const TriMesh& object) {
  double depth = 0.0;
  for (const Vec3& p : gripper.sample_points()) {
    if (object.contains(p)) depth = std::max(depth, object.nearest_distance(p));
  }
  return depth;
}

}  // namespace graspmimic
