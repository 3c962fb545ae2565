#pragma once

// Procedural grippers, objects and demonstrations used by the test and acceptance
// suites, and by `graspmimic fixtures` to write the same data to disk.

#include <string>
#include <vector>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/pipeline.hpp"
#include "graspmimic/primitives.hpp"

namespace graspmimic::synthetic {

struct LinkBlueprint {
  std::string name;
  RawMesh mesh;  // base frame, open pose
  int parent = -1;
};

/// Everything needed to build a GripperModel, before surface sampling.
struct GripperBlueprint {
  std::string name;
  std::vector<LinkBlueprint> links;
  std::vector<Joint> joints;
  std::vector<Fingertip> fingertips;
  PalmFrame palm;
};

inline GripperModel build_model(const GripperBlueprint& bp, std::size_t link_samples,
                                std::uint64_t seed = TriMesh::kDefaultSeed) {
  std::vector<Link> links;
  for (std::size_t l = 0; l < bp.links.size(); ++l) {
    const LinkBlueprint& lb = bp.links[l];
    links.push_back({lb.name, TriMesh::from_triangles(lb.mesh.vertices, lb.mesh.faces, link_samples, seed + l),
                     lb.parent});
  }
  return GripperModel(bp.name, std::move(links), bp.joints, bp.fingertips, bp.palm);
}

namespace detail {
/// Two-phalanx finger rooted on the palm at (x, y), closing towards x = 0.
inline void add_finger(GripperBlueprint& bp, const std::string& name, double x, double y, double half_x,
                       double half_y, double proximal_len, double distal_len) {
  const double side = x < 0.0 ? 1.0 : -1.0;  // +y axis closes a finger on the -x side
  const Vec3 axis(0.0, side, 0.0);
  const auto prox = static_cast<int>(bp.links.size());
  bp.links.push_back({name + "_proximal",
                      make_box({x - half_x, y - half_y, 0.0}, {x + half_x, y + half_y, proximal_len}), 0});
  bp.joints.push_back({static_cast<std::size_t>(prox), axis, {x, y, 0.0}, -0.3, 1.3, -0.2});
  const auto dist = static_cast<int>(bp.links.size());
  bp.links.push_back({name + "_distal",
                      make_box({x - half_x, y - half_y, proximal_len},
                               {x + half_x, y + half_y, proximal_len + distal_len}),
                      prox});
  bp.joints.push_back({static_cast<std::size_t>(dist), axis, {x, y, proximal_len}, -0.2, 1.5, 0.0});
  const double inner = x + side * half_x;
  bp.fingertips.push_back({static_cast<std::size_t>(dist), {inner, y, proximal_len + distal_len - 0.007}});
}
}  // namespace detail

/// Parallel two-finger gripper, four revolute DOFs. Palm normal +z, forward +y.
inline GripperBlueprint two_finger_blueprint() {
  GripperBlueprint bp;
  bp.name = "two_finger";
  bp.links.push_back({"palm", make_box({-0.06, -0.015, -0.02}, {0.06, 0.015, 0.0}), -1});
  detail::add_finger(bp, "left", -0.05, 0.0, 0.0075, 0.01, 0.045, 0.03);
  detail::add_finger(bp, "right", 0.05, 0.0, 0.0075, 0.01, 0.045, 0.03);
  bp.palm = {Vec3::Zero(), Vec3::UnitY(), Vec3::UnitZ()};
  return bp;
}

/// Stand-in for a posed human hand in a precision pinch: index finger on -x, thumb
/// on +x, proportions slightly different from the gripper. Same palm-frame convention.
inline GripperBlueprint pinch_hand_blueprint() {
  GripperBlueprint bp;
  bp.name = "pinch_hand";
  bp.links.push_back({"palm", make_box({-0.062, -0.02, -0.02}, {0.062, 0.02, 0.0}), -1});
  detail::add_finger(bp, "index", -0.051, 0.0, 0.008, 0.009, 0.046, 0.028);
  detail::add_finger(bp, "thumb", 0.051, 0.0, 0.0085, 0.0105, 0.043, 0.031);
  bp.palm = {Vec3::Zero(), Vec3::UnitY(), Vec3::UnitZ()};
  return bp;
}

inline GripperModel two_finger_gripper(std::size_t link_samples = 500) {
  return build_model(two_finger_blueprint(), link_samples);
}

struct Fixture {
  std::string name;
  RawMesh object_raw;
  TriMesh object;
  RawMesh hand_raw;  // posed hand geometry in the object frame
  HandDemo demo;
  GripperConfig hand_config;
};

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"sphere_pinch", "box_wrap", "cylinder_side", "mug_handle",
                                              "plate_edge"};
  return names;
}

/// Hand base pose from the palm normal (towards the object), forward vector and palm origin.
inline RigidTransform palm_pose(const Vec3& normal, const Vec3& forward_hint, const Vec3& origin) {
  const Vec3 n = normal.normalized();
  const Vec3 f = (forward_hint - forward_hint.dot(n) * n).normalized();
  Mat3 r;
  r.col(0) = f.cross(n);
  r.col(1) = f;
  r.col(2) = n;
  return {r, origin};
}

inline RawMesh fixture_object(const std::string& name) {
  if (name == "sphere_pinch") return make_icosphere(0.03, 3);
  if (name == "box_wrap") return make_box({-0.03, -0.025, -0.025}, {0.03, 0.025, 0.025});
  if (name == "cylinder_side") return make_cylinder(0.025, 0.12, 48);
  if (name == "mug_handle") {
    RawMesh body = make_cylinder(0.04, 0.09, 48);
    RawMesh handle = make_torus(0.025, 0.008, 48, 16);
    // Ring in the xz-plane, attached to the +x side of the body.
    handle.transform({axis_angle(Vec3::UnitX(), std::numbers::pi / 2.0), Vec3(0.06, 0.0, 0.0)});
    body.append(handle);
    return body;
  }
  if (name == "plate_edge") return make_cylinder(0.07, 0.02, 64);
  throw ValidationError("unknown fixture '" + name + "'");
}

inline RigidTransform fixture_hand_pose(const std::string& name) {
  if (name == "sphere_pinch") {
    const Vec3 n = -Vec3(0.3, -0.2, 1.0).normalized();
    return palm_pose(n, Vec3(1.0, 0.4, 0.0), -0.055 * n);
  }
  if (name == "box_wrap") return palm_pose(Vec3::UnitZ(), Vec3::UnitY(), {0.0, 0.0, -0.05});
  if (name == "cylinder_side") return palm_pose(Vec3::UnitY(), Vec3::UnitZ(), {0.0, -0.05, 0.0});
  if (name == "mug_handle") return palm_pose(-Vec3::UnitX(), -Vec3::UnitZ(), {0.13, 0.0, 0.0});
  if (name == "plate_edge") return palm_pose(-Vec3::UnitX(), Vec3::UnitY(), {0.10, 0.0, 0.0});
  throw ValidationError("unknown fixture '" + name + "'");
}

/// Demo hand surface samples: about the sample density of the gripper's finger links.
inline constexpr std::size_t kHandSamples = 5000;

/// Flexion of every distal phalanx in the demonstrations.
inline constexpr double kDemoCurl = 0.4;

/// Demonstrated closing: distal joints pre-curled to `curl`, then each proximal joint
/// swept in fine steps until its finger touches the object. Deliberately unlike the
/// discrete finger-initialization strategy, which closes distal joints last.
inline GripperConfig close_hand(const GripperModel& hand, const TriMesh& object, GripperConfig c, double curl) {
  constexpr int kSteps = 240;
  const auto proximal = [&](std::size_t dof) { return hand.links()[hand.links_moved_by(dof).front()].parent == 0; };
  for (std::size_t dof = 0; dof < hand.dof_count(); ++dof) {
    if (!proximal(dof)) c.theta[static_cast<Eigen::Index>(dof)] = curl;
  }
  for (std::size_t dof = 0; dof < hand.dof_count(); ++dof) {
    if (!proximal(dof)) continue;
    const std::vector<std::size_t> moving = hand.links_moved_by(dof);
    const std::vector<double> bins = closing_bins(hand, dof, kSteps);
    double chosen = bins.front();
    for (double value : bins) {
      GripperConfig trial = c;
      trial.theta[static_cast<Eigen::Index>(dof)] = value;
      if (links_penetrate(hand, forward_kinematics(hand, trial), object, moving)) break;
      chosen = value;
    }
    c.theta[static_cast<Eigen::Index>(dof)] = chosen;
  }
  return c;
}

/// Builds the object and closes the demo hand onto it with a fine discrete sweep.
inline Fixture make_fixture(const std::string& name, const GripperBlueprint& hand_bp,
                            std::size_t object_samples = 2000, std::size_t hand_samples = kHandSamples) {
  Fixture fx;
  fx.name = name;
  fx.object_raw = fixture_object(name);
  fx.object = TriMesh::from_triangles(fx.object_raw.vertices, fx.object_raw.faces, object_samples);

  const GripperModel hand = build_model(hand_bp, 400);
  const RigidTransform pose = fixture_hand_pose(name);
  GripperConfig c = open_config(hand);
  c.rotation_6d = matrix_to_rot6d(pose.rotation);
  c.translation = pose.translation;
  c = close_hand(hand, fx.object, c, kDemoCurl);
  fx.hand_config = c;

  const PosedGripper posed = forward_kinematics(hand, c);
  for (std::size_t l = 0; l < hand_bp.links.size(); ++l) {
    RawMesh part = hand_bp.links[l].mesh;
    part.transform(posed.link_world[l]);
    fx.hand_raw.append(part);
  }
  fx.demo.hand_mesh = TriMesh::from_triangles(fx.hand_raw.vertices, fx.hand_raw.faces, hand_samples);
  fx.demo.palm_frame = posed.palm;
  fx.demo.base_pose = posed.base;
  return fx;
}

inline Fixture make_fixture(const std::string& name, std::size_t object_samples = 2000,
                            std::size_t hand_samples = kHandSamples) {
  return make_fixture(name, pinch_hand_blueprint(), object_samples, hand_samples);
}

inline RetargetRequest make_request(const Fixture& fx, const GripperModel& gripper) {
  RetargetRequest req;
  req.object = fx.object;
  req.demo = fx.demo;
  req.model = gripper;
  return req;
}

}  // namespace graspmimic::synthetic
