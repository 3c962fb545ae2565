#pragma once

// JSON documents: gripper model files, grasp problems, retarget results and
// configuration files. Every object rejects fields it does not know.

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/SVD>
#include <json.hpp>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/mesh_io.hpp"
#include "graspmimic/pipeline.hpp"
#include "graspmimic/synthetic.hpp"

#ifndef GRASPMIMIC_VERSION
#define GRASPMIMIC_VERSION "0.1.0"
#endif

namespace graspmimic {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = GRASPMIMIC_VERSION;

/// Surface and Monte Carlo sample counts of a problem.
struct SamplingCounts {
  std::size_t object_samples = 2000;
  std::size_t gripper_link_samples = 500;
  std::size_t hand_samples = synthetic::kHandSamples;
  std::size_t volume_samples = 100000;
  std::size_t epsilon_directions = 5000;

  bool operator==(const SamplingCounts&) const = default;
};

namespace detail {

inline std::string join_path(std::string_view where, std::string_view key) {
  return where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
}

inline void expect_object(const Json& j, std::string_view where) {
  if (!j.is_object()) throw ValidationError(std::string(where.empty() ? "document" : where) + " must be an object");
}

inline void expect_fields(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  expect_object(j, where);
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ValidationError("unknown field '" + join_path(where, key) + "'");
    }
  }
}

inline const Json& require(const Json& j, std::string_view key, std::string_view where) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing field '" + join_path(where, key) + "'");
  return *it;
}

inline double as_number(const Json& j, std::string_view where) {
  if (!j.is_number()) throw ValidationError("'" + std::string(where) + "' must be a number");
  return j.get<double>();
}

inline std::int64_t as_integer(const Json& j, std::string_view where) {
  if (!j.is_number_integer()) throw ValidationError("'" + std::string(where) + "' must be an integer");
  return j.get<std::int64_t>();
}

inline std::uint64_t as_unsigned(const Json& j, std::string_view where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw ValidationError("'" + std::string(where) + "' must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

inline bool as_bool(const Json& j, std::string_view where) {
  if (!j.is_boolean()) throw ValidationError("'" + std::string(where) + "' must be true or false");
  return j.get<bool>();
}

inline std::string as_string(const Json& j, std::string_view where) {
  if (!j.is_string()) throw ValidationError("'" + std::string(where) + "' must be a string");
  return j.get<std::string>();
}

inline std::vector<double> as_numbers(const Json& j, std::string_view where, std::optional<std::size_t> size = {}) {
  if (!j.is_array()) throw ValidationError("'" + std::string(where) + "' must be an array of numbers");
  if (size && j.size() != *size) {
    throw ValidationError("'" + std::string(where) + "' must have " + std::to_string(*size) + " entries");
  }
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_number(j[i], std::string(where) + "[" + std::to_string(i) + "]"));
  return out;
}

inline Vec3 as_vec3(const Json& j, std::string_view where) {
  const std::vector<double> v = as_numbers(j, where, 3);
  return {v[0], v[1], v[2]};
}

inline VecX as_vecx(const Json& j, std::string_view where) {
  const std::vector<double> v = as_numbers(j, where);
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Row-major 3x3.
inline Mat3 as_mat3(const Json& j, std::string_view where) {
  const std::vector<double> v = as_numbers(j, where, 9);
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = v[static_cast<std::size_t>(3 * r + c)];
  }
  return m;
}

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json to_json(const VecX& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Json mat3_to_json(const Mat3& m) {
  Json a = Json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  }
  return a;
}

inline void check_schema_version(const Json& j, std::string_view where) {
  const std::int64_t v = as_integer(require(j, "schema_version", where), join_path(where, "schema_version"));
  if (v != kSchemaVersion) {
    throw ValidationError("unsupported schema_version " + std::to_string(v) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  }
}

/// Flat records of scalar fields, listed once and used for both directions.
template <typename T, typename F>
void scalar_fields(T& h, F&& f) {
  using U = std::remove_const_t<T>;
  if constexpr (std::is_same_v<U, Hyperparams>) {
    f("lambda_contact", h.lambda_contact);
    f("lambda_orientation", h.lambda_orientation);
    f("lambda_interpen", h.lambda_interpen);
    f("lambda_self", h.lambda_self);
    f("tau", h.tau);
    f("delta", h.delta);
    f("alpha1", h.alpha1);
    f("beta1", h.beta1);
    f("gamma1", h.gamma1);
    f("alpha2", h.alpha2);
    f("beta2", h.beta2);
    f("heatmap_contact_threshold", h.heatmap_contact_threshold);
  } else if constexpr (std::is_same_v<U, AdamWParams>) {
    f("beta1", h.beta1);
    f("beta2", h.beta2);
    f("eps", h.eps);
    f("weight_decay", h.weight_decay);
  } else if constexpr (std::is_same_v<U, OptSchedule>) {
    f("lr_translation", h.lr_translation);
    f("lr_rotation", h.lr_rotation);
    f("lr_theta", h.lr_theta);
    f("iterations", h.iterations);
    f("decay_at", h.decay_at);
    f("decay_factor", h.decay_factor);
  } else if constexpr (std::is_same_v<U, WrenchModel>) {
    f("friction_mu", h.friction_mu);
    f("cone_edges", h.cone_edges);
    f("torque_scale", h.torque_scale);
    f("contact_delta", h.contact_delta);
  } else if constexpr (std::is_same_v<U, LossToggles>) {
    f("contact", h.contact);
    f("orientation", h.orientation);
    f("interpen", h.interpen);
    f("self_pen", h.self_pen);
  } else if constexpr (std::is_same_v<U, LossBreakdown>) {
    f("total", h.total);
    f("objective", h.objective);
    f("contact", h.contact);
    f("orientation", h.orientation);
    f("interpen", h.interpen);
    f("push", h.push);
    f("pull", h.pull);
    f("normal", h.normal);
    f("self_pen", h.self_pen);
    f("fingertip", h.fingertip);
  } else if constexpr (std::is_same_v<U, MetricsReport>) {
    f("epsilon_quality", h.epsilon_quality);
    f("force_closure", h.force_closure);
    f("max_penetration_depth_cm", h.max_penetration_depth_cm);
    f("penetration_volume_cm3", h.penetration_volume_cm3);
    f("orientation_difference", h.orientation_difference);
    f("contact_heatmap_difference", h.contact_heatmap_difference);
    f("contact_count", h.contact_count);
  } else if constexpr (std::is_same_v<U, SamplingCounts>) {
    f("object_samples", h.object_samples);
    f("gripper_link_samples", h.gripper_link_samples);
    f("hand_samples", h.hand_samples);
    f("volume_samples", h.volume_samples);
    f("epsilon_directions", h.epsilon_directions);
  } else {
    static_assert(sizeof(U) == 0, "no field list for this type");
  }
}

template <typename T>
void read_scalar(const Json& j, T& out, std::string_view where) {
  if constexpr (std::is_same_v<T, bool>) {
    out = as_bool(j, where);
  } else if constexpr (std::is_same_v<T, double>) {
    out = as_number(j, where);
  } else if constexpr (std::is_same_v<T, int>) {
    const std::int64_t v = as_integer(j, where);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw ValidationError("'" + std::string(where) + "' is out of range");
    }
    out = static_cast<int>(v);
  } else if constexpr (std::is_unsigned_v<T>) {
    out = static_cast<T>(as_unsigned(j, where));
  } else {
    static_assert(sizeof(T) == 0, "unsupported scalar type");
  }
}

template <typename T>
Json fields_to_json(const T& value) {
  Json j = Json::object();
  scalar_fields(value, [&](const char* name, const auto& v) { j[name] = v; });
  return j;
}

/// Reads the listed fields into `value`. Absent fields keep their current value
/// unless `complete` is set; extra fields are rejected.
template <typename T>
void fields_from_json(const Json& j, T& value, std::string_view where, bool complete = false,
                      std::initializer_list<std::string_view> extra = {}) {
  expect_object(j, where);
  std::vector<std::string> known(extra.begin(), extra.end());
  scalar_fields(value, [&](const char* name, auto& v) {
    known.emplace_back(name);
    const auto it = j.find(name);
    if (it == j.end()) {
      if (complete) throw ValidationError("missing field '" + join_path(where, name) + "'");
      return;
    }
    read_scalar(*it, v, join_path(where, name));
  });
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ValidationError("unknown field '" + join_path(where, key) + "'");
    }
  }
}

inline Json schedule_to_json(const OptSchedule& s) {
  Json j = fields_to_json(s);
  j["adamw"] = fields_to_json(s.adamw);
  return j;
}

inline void schedule_from_json(const Json& j, OptSchedule& s, std::string_view where, bool complete = false) {
  fields_from_json(j, s, where, complete, {"adamw"});
  if (const auto it = j.find("adamw"); it != j.end()) {
    fields_from_json(*it, s.adamw, join_path(where, "adamw"), complete);
  } else if (complete) {
    throw ValidationError("missing field '" + join_path(where, "adamw") + "'");
  }
}

inline Json palm_to_json(const PalmFrame& p) {
  return {{"origin", to_json(p.origin)}, {"forward", to_json(p.forward)}, {"normal", to_json(p.normal)}};
}

inline PalmFrame palm_from_json(const Json& j, std::string_view where) {
  expect_fields(j, {"origin", "forward", "normal"}, where);
  PalmFrame p;
  p.origin = as_vec3(require(j, "origin", where), join_path(where, "origin"));
  p.forward = as_vec3(require(j, "forward", where), join_path(where, "forward"));
  p.normal = as_vec3(require(j, "normal", where), join_path(where, "normal"));
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(where) + ": " + e.what());
  }
  return p;
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("failed writing " + path.string());
}

}  // namespace detail

/// Canonical text of a document: two-space indentation, sorted keys, trailing newline.
inline std::string dump_document(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Configurations

inline Json config_to_json(const GripperConfig& c) {
  return {{"translation", detail::to_json(c.translation)},
          {"rotation", detail::mat3_to_json(c.rotation())},
          {"rotation_6d", detail::to_json(VecX(c.rotation_6d))},
          {"theta", detail::to_json(c.theta)}};
}

/// Accepts `rotation_6d`, a row-major `rotation` matrix, or both (which must agree).
inline GripperConfig config_from_json(const Json& j, std::string_view where) {
  detail::expect_fields(j, {"translation", "rotation", "rotation_6d", "theta", "schema_version"}, where);
  GripperConfig c;
  c.translation = detail::as_vec3(detail::require(j, "translation", where), detail::join_path(where, "translation"));
  c.theta = detail::as_vecx(detail::require(j, "theta", where), detail::join_path(where, "theta"));
  const auto r6 = j.find("rotation_6d");
  const auto rm = j.find("rotation");
  if (r6 == j.end() && rm == j.end()) {
    throw ValidationError("missing field '" + detail::join_path(where, "rotation_6d") + "'");
  }
  if (r6 != j.end()) {
    const std::vector<double> v = detail::as_numbers(*r6, detail::join_path(where, "rotation_6d"), 6);
    c.rotation_6d = Eigen::Map<const Rot6d>(v.data());
    rot6d_to_matrix(c.rotation_6d);
  }
  if (rm != j.end()) {
    const Mat3 m = detail::as_mat3(*rm, detail::join_path(where, "rotation"));
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-5 || m.determinant() < 0.0) {
      throw ValidationError("'" + detail::join_path(where, "rotation") + "' is not a rotation matrix");
    }
    if (r6 == j.end()) {
      c.rotation_6d = matrix_to_rot6d(m);
    } else if ((m - c.rotation()).cwiseAbs().maxCoeff() > 1e-9) {
      throw ValidationError("'" + detail::join_path(where, "rotation") + "' disagrees with rotation_6d");
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Gripper model files

namespace detail {
inline std::size_t link_by_name(const std::vector<std::string>& names, const std::string& name,
                                std::string_view where) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ValidationError("'" + std::string(where) + "' names unknown link '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}
}  // namespace detail

/// Loads a gripper model. Link meshes are authored in the base frame at the open
/// pose; link `l` is sampled with seed `seed + l`.
inline GripperModel load_gripper(const std::filesystem::path& path, std::size_t link_samples,
                                 std::uint64_t seed = TriMesh::kDefaultSeed) {
  const Json j = detail::read_json_file(path);
  try {
    detail::expect_fields(j, {"schema_version", "name", "links", "joints", "coupling", "fingertips", "palm_frame"}, "");
    detail::check_schema_version(j, "");
    const std::string name = detail::as_string(detail::require(j, "name", ""), "name");

    const Json& jl = detail::require(j, "links", "");
    if (!jl.is_array() || jl.empty()) throw ValidationError("'links' must be a non-empty array");
    std::vector<std::string> names;
    for (std::size_t l = 0; l < jl.size(); ++l) {
      const std::string where = "links[" + std::to_string(l) + "]";
      detail::expect_fields(jl[l], {"name", "mesh_path", "parent"}, where);
      names.push_back(detail::as_string(detail::require(jl[l], "name", where), where + ".name"));
    }
    std::vector<Link> links;
    const std::filesystem::path base_dir = path.parent_path();
    for (std::size_t l = 0; l < jl.size(); ++l) {
      const std::string where = "links[" + std::to_string(l) + "]";
      Link link;
      link.name = names[l];
      const Json& parent = detail::require(jl[l], "parent", where);
      link.parent = parent.is_null()
                        ? -1
                        : static_cast<int>(detail::link_by_name(
                              names, detail::as_string(parent, where + ".parent"), where + ".parent"));
      const std::string mesh = detail::as_string(detail::require(jl[l], "mesh_path", where), where + ".mesh_path");
      link.mesh = load_mesh(base_dir / mesh, link_samples, seed + l);
      links.push_back(std::move(link));
    }

    std::vector<Joint> joints;
    const Json& jj = detail::require(j, "joints", "");
    if (!jj.is_array()) throw ValidationError("'joints' must be an array");
    for (std::size_t k = 0; k < jj.size(); ++k) {
      const std::string where = "joints[" + std::to_string(k) + "]";
      detail::expect_fields(jj[k], {"child_link", "axis", "pivot", "limits", "open_angle"}, where);
      Joint jt;
      jt.child_link = detail::link_by_name(
          names, detail::as_string(detail::require(jj[k], "child_link", where), where + ".child_link"),
          where + ".child_link");
      jt.axis = detail::as_vec3(detail::require(jj[k], "axis", where), where + ".axis");
      jt.pivot = detail::as_vec3(detail::require(jj[k], "pivot", where), where + ".pivot");
      const std::vector<double> lim = detail::as_numbers(detail::require(jj[k], "limits", where), where + ".limits", 2);
      jt.lower = lim[0];
      jt.upper = lim[1];
      jt.open_angle = detail::as_number(detail::require(jj[k], "open_angle", where), where + ".open_angle");
      joints.push_back(jt);
    }

    std::optional<MatX> coupling;
    if (const auto it = j.find("coupling"); it != j.end()) {
      // n rows (actuated values) of J entries (joints).
      if (!it->is_array() || it->empty()) throw ValidationError("'coupling' must be a non-empty array of rows");
      MatX c(static_cast<Eigen::Index>(joints.size()), static_cast<Eigen::Index>(it->size()));
      for (std::size_t k = 0; k < it->size(); ++k) {
        const std::vector<double> row =
            detail::as_numbers((*it)[k], "coupling[" + std::to_string(k) + "]", joints.size());
        for (std::size_t jn = 0; jn < row.size(); ++jn) {
          c(static_cast<Eigen::Index>(jn), static_cast<Eigen::Index>(k)) = row[jn];
        }
      }
      coupling = c;
    }

    std::vector<Fingertip> tips;
    const Json& jf = detail::require(j, "fingertips", "");
    if (!jf.is_array()) throw ValidationError("'fingertips' must be an array");
    for (std::size_t k = 0; k < jf.size(); ++k) {
      const std::string where = "fingertips[" + std::to_string(k) + "]";
      detail::expect_fields(jf[k], {"link", "point"}, where);
      Fingertip f;
      f.link = detail::link_by_name(names, detail::as_string(detail::require(jf[k], "link", where), where + ".link"),
                                    where + ".link");
      f.point = detail::as_vec3(detail::require(jf[k], "point", where), where + ".point");
      tips.push_back(f);
    }
    const PalmFrame palm = detail::palm_from_json(detail::require(j, "palm_frame", ""), "palm_frame");
    return GripperModel(name, std::move(links), std::move(joints), std::move(tips), palm, coupling);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Writes a blueprint as a model file plus one OBJ per link in `dir`.
inline std::filesystem::path write_gripper(const std::filesystem::path& dir, const synthetic::GripperBlueprint& bp) {
  std::filesystem::create_directories(dir);
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = bp.name;
  j["links"] = Json::array();
  for (const synthetic::LinkBlueprint& lb : bp.links) {
    const std::string file = lb.name + ".obj";
    write_obj(dir / file, lb.mesh.vertices, lb.mesh.faces, lb.name);
    j["links"].push_back({{"name", lb.name},
                          {"mesh_path", file},
                          {"parent", lb.parent < 0 ? Json(nullptr)
                                                   : Json(bp.links[static_cast<std::size_t>(lb.parent)].name)}});
  }
  j["joints"] = Json::array();
  for (const Joint& jt : bp.joints) {
    j["joints"].push_back({{"child_link", bp.links[jt.child_link].name},
                           {"axis", detail::to_json(jt.axis)},
                           {"pivot", detail::to_json(jt.pivot)},
                           {"limits", Json::array({jt.lower, jt.upper})},
                           {"open_angle", jt.open_angle}});
  }
  j["fingertips"] = Json::array();
  for (const Fingertip& f : bp.fingertips) {
    j["fingertips"].push_back({{"link", bp.links[f.link].name}, {"point", detail::to_json(f.point)}});
  }
  j["palm_frame"] = detail::palm_to_json(bp.palm);
  const std::filesystem::path out = dir / (bp.name + ".json");
  detail::write_text_file(out, dump_document(j));
  return out;
}

// ---------------------------------------------------------------------------
// Grasp problems

/// A problem file with every optional setting resolved. Mesh paths are kept as
/// written and resolved against the problem file's directory.
struct ProblemDoc {
  std::string object_mesh;
  std::string hand_mesh;
  PalmFrame palm_frame;
  RigidTransform hand_base_pose;
  Hyperparams hp;
  OptSchedule stage_b;
  OptSchedule stage_c;
  WrenchModel wrench_model;
  SamplingCounts sampling;
  std::uint64_t seed = 0;
  FingerInit finger_init = FingerInit::ContactOptimization;
  int discrete_bins = 20;
  LossToggles loss_mask;

  bool operator==(const ProblemDoc&) const = default;
};

/// Seed from the environment, or 0 when GRASPMIMIC_SEED is unset.
inline std::uint64_t env_seed() {
  const char* s = std::getenv("GRASPMIMIC_SEED");
  if (s == nullptr || *s == '\0') return 0;
  const std::string_view text(s);
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw ValidationError(std::string("GRASPMIMIC_SEED is not a non-negative integer: ") + s);
  }
  return v;
}

namespace detail {
/// Rotation given to 1e-5; re-projected onto SO(3) when it is off by more than 1e-9.
inline Mat3 checked_rotation(const Mat3& m, std::string_view where) {
  const double err = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (err > 1e-5 || m.determinant() <= 0.0) {
    throw ValidationError("'" + std::string(where) + "' is not orthonormal within 1e-5");
  }
  if (err <= 1e-9) return m;
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}
}  // namespace detail

inline ProblemDoc problem_from_json(const Json& j) {
  detail::expect_fields(j,
                        {"schema_version", "object_mesh", "hand_mesh", "palm_frame", "hand_base_pose", "hyperparams",
                         "schedule", "wrench_model", "sampling", "seed", "finger_init_strategy", "discrete_bins",
                         "loss_mask"},
                        "");
  detail::check_schema_version(j, "");
  ProblemDoc p;
  p.object_mesh = detail::as_string(detail::require(j, "object_mesh", ""), "object_mesh");
  p.hand_mesh = detail::as_string(detail::require(j, "hand_mesh", ""), "hand_mesh");
  p.palm_frame = detail::palm_from_json(detail::require(j, "palm_frame", ""), "palm_frame");
  const Json& pose = detail::require(j, "hand_base_pose", "");
  detail::expect_fields(pose, {"rotation", "translation"}, "hand_base_pose");
  p.hand_base_pose.rotation = detail::checked_rotation(
      detail::as_mat3(detail::require(pose, "rotation", "hand_base_pose"), "hand_base_pose.rotation"),
      "hand_base_pose.rotation");
  p.hand_base_pose.translation =
      detail::as_vec3(detail::require(pose, "translation", "hand_base_pose"), "hand_base_pose.translation");

  if (const auto it = j.find("hyperparams"); it != j.end()) detail::fields_from_json(*it, p.hp, "hyperparams");
  if (const auto it = j.find("schedule"); it != j.end()) {
    detail::expect_fields(*it, {"stage_b", "stage_c"}, "schedule");
    if (const auto b = it->find("stage_b"); b != it->end()) detail::schedule_from_json(*b, p.stage_b, "schedule.stage_b");
    if (const auto c = it->find("stage_c"); c != it->end()) detail::schedule_from_json(*c, p.stage_c, "schedule.stage_c");
  }
  if (const auto it = j.find("wrench_model"); it != j.end()) detail::fields_from_json(*it, p.wrench_model, "wrench_model");
  if (const auto it = j.find("sampling"); it != j.end()) detail::fields_from_json(*it, p.sampling, "sampling");
  if (const auto it = j.find("seed"); it != j.end()) {
    p.seed = detail::as_unsigned(*it, "seed");
  } else {
    p.seed = env_seed();
  }
  if (const auto it = j.find("finger_init_strategy"); it != j.end()) {
    p.finger_init = finger_init_from_string(detail::as_string(*it, "finger_init_strategy"));
  }
  if (const auto it = j.find("discrete_bins"); it != j.end()) detail::read_scalar(*it, p.discrete_bins, "discrete_bins");
  if (const auto it = j.find("loss_mask"); it != j.end()) detail::fields_from_json(*it, p.loss_mask, "loss_mask");

  p.hp.validate();
  p.stage_b.validate();
  p.stage_c.validate();
  p.wrench_model.validate();
  if (p.discrete_bins < 1) throw ValidationError("'discrete_bins' must be at least 1");
  if (p.sampling.object_samples < 4 || p.sampling.gripper_link_samples < 4 || p.sampling.hand_samples < 4) {
    throw ValidationError("surface sample counts must be at least 4");
  }
  if (p.sampling.volume_samples < 1000) throw ValidationError("'sampling.volume_samples' must be at least 1000");
  if (p.sampling.epsilon_directions < 1000) {
    throw ValidationError("'sampling.epsilon_directions' must be at least 1000");
  }
  return p;
}

/// Every field written out, so the document is the resolved configuration.
inline Json problem_to_json(const ProblemDoc& p) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["object_mesh"] = p.object_mesh;
  j["hand_mesh"] = p.hand_mesh;
  j["palm_frame"] = detail::palm_to_json(p.palm_frame);
  j["hand_base_pose"] = {{"rotation", detail::mat3_to_json(p.hand_base_pose.rotation)},
                         {"translation", detail::to_json(p.hand_base_pose.translation)}};
  j["hyperparams"] = detail::fields_to_json(p.hp);
  j["schedule"] = {{"stage_b", detail::schedule_to_json(p.stage_b)}, {"stage_c", detail::schedule_to_json(p.stage_c)}};
  j["wrench_model"] = detail::fields_to_json(p.wrench_model);
  j["sampling"] = detail::fields_to_json(p.sampling);
  j["seed"] = p.seed;
  j["finger_init_strategy"] = to_string(p.finger_init);
  j["discrete_bins"] = p.discrete_bins;
  j["loss_mask"] = detail::fields_to_json(p.loss_mask);
  return j;
}

inline ProblemDoc load_problem(const std::filesystem::path& path) {
  const Json j = detail::read_json_file(path);
  try {
    return problem_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

/// Surface samples of every mesh of a problem are drawn from this seed.
inline std::uint64_t sampling_seed(const ProblemDoc& p) { return TriMesh::kDefaultSeed + p.seed; }

inline GripperModel load_gripper_for(const std::filesystem::path& path, const ProblemDoc& p) {
  return load_gripper(path, p.sampling.gripper_link_samples, sampling_seed(p));
}

inline TriMesh load_problem_object(const ProblemDoc& p, const std::filesystem::path& problem_dir) {
  return load_mesh(problem_dir / p.object_mesh, p.sampling.object_samples, sampling_seed(p));
}

inline HandDemo load_problem_demo(const ProblemDoc& p, const std::filesystem::path& problem_dir) {
  HandDemo demo;
  demo.hand_mesh = load_mesh(problem_dir / p.hand_mesh, p.sampling.hand_samples, sampling_seed(p));
  demo.palm_frame = p.palm_frame;
  demo.base_pose = p.hand_base_pose;
  return demo;
}

inline MetricsSettings metrics_settings(const ProblemDoc& p) {
  return {p.sampling.volume_samples, p.sampling.epsilon_directions, p.seed};
}

inline RetargetRequest make_request(const ProblemDoc& p, const std::filesystem::path& problem_dir,
                                    GripperModel gripper) {
  RetargetRequest req;
  req.object = load_problem_object(p, problem_dir);
  req.demo = load_problem_demo(p, problem_dir);
  req.model = std::move(gripper);
  req.hp = p.hp;
  req.stage_b_schedule = p.stage_b;
  req.stage_c_schedule = p.stage_c;
  req.finger_init = p.finger_init;
  req.discrete_bins = p.discrete_bins;
  req.loss_mask = p.loss_mask;
  req.wrench_model = p.wrench_model;
  req.metrics = metrics_settings(p);
  req.seed = p.seed;
  return req;
}

// ---------------------------------------------------------------------------
// Results

struct StageRecord {
  GripperConfig config;
  LossBreakdown loss;

  bool operator==(const StageRecord&) const = default;
};

struct ResultDoc {
  std::string tool_version = kToolVersion;
  std::string timestamp;  // UTC, ISO 8601; the only field that varies between identical runs
  std::string gripper;
  StageRecord stage_a;
  StageRecord stage_b;
  StageRecord final_stage;
  MetricsReport metrics;
  std::vector<std::string> warnings;
  ProblemDoc config;

  bool operator==(const ResultDoc&) const = default;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline ResultDoc make_result_doc(const RetargetResult& r, const ProblemDoc& problem, const std::string& gripper) {
  ResultDoc d;
  d.timestamp = utc_timestamp();
  d.gripper = gripper;
  d.stage_a = {r.stage_a, r.loss_a};
  d.stage_b = {r.stage_b, r.loss_b};
  d.final_stage = {r.final_config, r.loss_final};
  d.metrics = r.metrics;
  d.warnings = r.warnings;
  d.config = problem;
  return d;
}

namespace detail {
inline Json stage_to_json(const StageRecord& s) {
  return {{"config", config_to_json(s.config)}, {"loss", fields_to_json(s.loss)}};
}

inline StageRecord stage_from_json(const Json& j, std::string_view where) {
  expect_fields(j, {"config", "loss"}, where);
  StageRecord s;
  s.config = config_from_json(require(j, "config", where), join_path(where, "config"));
  fields_from_json(require(j, "loss", where), s.loss, join_path(where, "loss"), true);
  return s;
}
}  // namespace detail

inline Json result_to_json(const ResultDoc& d) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = d.tool_version;
  j["timestamp"] = d.timestamp;
  j["gripper"] = d.gripper;
  j["stage_a"] = detail::stage_to_json(d.stage_a);
  j["stage_b"] = detail::stage_to_json(d.stage_b);
  j["final"] = detail::stage_to_json(d.final_stage);
  j["metrics"] = detail::fields_to_json(d.metrics);
  j["warnings"] = d.warnings;
  j["config"] = problem_to_json(d.config);
  return j;
}

inline ResultDoc result_from_json(const Json& j) {
  detail::expect_fields(j,
                        {"schema_version", "tool_version", "timestamp", "gripper", "stage_a", "stage_b", "final",
                         "metrics", "warnings", "config"},
                        "");
  detail::check_schema_version(j, "");
  ResultDoc d;
  d.tool_version = detail::as_string(detail::require(j, "tool_version", ""), "tool_version");
  d.timestamp = detail::as_string(detail::require(j, "timestamp", ""), "timestamp");
  d.gripper = detail::as_string(detail::require(j, "gripper", ""), "gripper");
  d.stage_a = detail::stage_from_json(detail::require(j, "stage_a", ""), "stage_a");
  d.stage_b = detail::stage_from_json(detail::require(j, "stage_b", ""), "stage_b");
  d.final_stage = detail::stage_from_json(detail::require(j, "final", ""), "final");
  detail::fields_from_json(detail::require(j, "metrics", ""), d.metrics, "metrics", true);
  const Json& w = detail::require(j, "warnings", "");
  if (!w.is_array()) throw ValidationError("'warnings' must be an array");
  for (std::size_t i = 0; i < w.size(); ++i) d.warnings.push_back(detail::as_string(w[i], "warnings[" + std::to_string(i) + "]"));
  try {
    d.config = problem_from_json(detail::require(j, "config", ""));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return d;
}

inline void write_document(const std::filesystem::path& path, const Json& j) {
  detail::write_text_file(path, dump_document(j));
}

/// Gripper configuration from either a result document (its final stage) or a
/// configuration document.
inline GripperConfig load_config(const std::filesystem::path& path) {
  const Json j = detail::read_json_file(path);
  try {
    detail::expect_object(j, "");
    detail::check_schema_version(j, "");
    if (j.contains("final")) return result_from_json(j).final_stage.config;
    return config_from_json(j, "");
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

inline Json config_document(const GripperConfig& c) {
  Json j = config_to_json(c);
  j["schema_version"] = kSchemaVersion;
  return j;
}

inline Json metrics_document(const MetricsReport& m) {
  return {{"schema_version", kSchemaVersion}, {"tool_version", kToolVersion}, {"metrics", detail::fields_to_json(m)}};
}

inline MetricsReport metrics_from_document(const Json& j) {
  detail::expect_fields(j, {"schema_version", "tool_version", "metrics"}, "");
  detail::check_schema_version(j, "");
  MetricsReport m;
  detail::fields_from_json(detail::require(j, "metrics", ""), m, "metrics", true);
  return m;
}

// ---------------------------------------------------------------------------
// Optimization traces

inline void write_trace_csv(std::ostream& out, const std::vector<TraceEntry>& stage_b,
                            const std::vector<TraceEntry>& stage_c) {
  out.precision(17);
  out << "stage,iteration,objective,total,contact,orientation,interpen,push,pull,normal,self_pen,fingertip,"
         "lr_translation,lr_rotation,lr_theta\n";
  const auto rows = [&](const char* stage, const std::vector<TraceEntry>& trace) {
    for (const TraceEntry& e : trace) {
      const LossBreakdown& l = e.loss;
      out << stage << ',' << e.iteration << ',' << l.objective << ',' << l.total << ',' << l.contact << ','
          << l.orientation << ',' << l.interpen << ',' << l.push << ',' << l.pull << ',' << l.normal << ','
          << l.self_pen << ',' << l.fingertip << ',' << e.lr_translation << ',' << e.lr_rotation << ','
          << e.lr_theta << '\n';
    }
  };
  rows("b", stage_b);
  rows("c", stage_c);
}

// ---------------------------------------------------------------------------
// Fixture set on disk

inline Json fixture_problem_json(const synthetic::Fixture& fx) {
  ProblemDoc p;
  p.object_mesh = "object.obj";
  p.hand_mesh = "hand.obj";
  p.palm_frame = fx.demo.palm_frame;
  p.hand_base_pose = fx.demo.base_pose;
  Json j = problem_to_json(p);
  // Minimal problem: only required fields and the seed; defaults apply to the rest.
  for (const char* k : {"hyperparams", "schedule", "wrench_model", "sampling", "finger_init_strategy",
                        "discrete_bins", "loss_mask"}) {
    j.erase(k);
  }
  return j;
}

/// Writes the two-finger gripper and every synthetic fixture under `dir`:
/// `dir/gripper/two_finger.json` and `dir/<fixture>/{problem.json,object.obj,hand.obj}`.
inline std::vector<std::filesystem::path> write_fixture_set(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  written.push_back(write_gripper(dir / "gripper", synthetic::two_finger_blueprint()));
  for (const std::string& name : synthetic::fixture_names()) {
    const synthetic::Fixture fx = synthetic::make_fixture(name);
    const std::filesystem::path fdir = dir / name;
    std::filesystem::create_directories(fdir);
    write_obj(fdir / "object.obj", fx.object_raw.vertices, fx.object_raw.faces, "object");
    write_obj(fdir / "hand.obj", fx.hand_raw.vertices, fx.hand_raw.faces, "hand");
    write_document(fdir / "problem.json", fixture_problem_json(fx));
    written.push_back(fdir / "problem.json");
  }
  return written;
}

}  // namespace graspmimic
