#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "graspmimic/graspmimic.hpp"

namespace graspmimic::test {

inline const GripperModel& gripper() {
  static const GripperModel g = synthetic::two_finger_gripper();
  return g;
}

inline const synthetic::Fixture& fixture(const std::string& name) {
  static std::map<std::string, synthetic::Fixture> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, synthetic::make_fixture(name)).first;
  return it->second;
}

inline TriMesh unit_cube(std::size_t samples = 2000, const Vec3& offset = Vec3::Zero()) {
  RawMesh m = make_box(Vec3::Zero(), Vec3::Ones());
  m.translate(offset);
  return TriMesh::from_triangles(m.vertices, m.faces, samples);
}

inline TriMesh sphere(double radius, int subdivisions, std::size_t samples) {
  RawMesh m = make_icosphere(radius, subdivisions);
  return TriMesh::from_triangles(m.vertices, m.faces, samples);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("graspmimic_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace graspmimic::test
