#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "graspmimic/kdtree.hpp"
#include "graspmimic/mesh.hpp"
#include "graspmimic/rotation.hpp"
#include "graspmimic/types.hpp"

namespace graspmimic {

/// Palm origin with the forward vector f (along the palm, towards the fingers) and
/// the palm normal n.
struct PalmFrame {
  Vec3 origin = Vec3::Zero();
  Vec3 forward = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();

  void validate(double tol = 1e-6) const {
    if (!origin.allFinite() || !forward.allFinite() || !normal.allFinite()) {
      throw ValidationError("palm frame has non-finite entries");
    }
    if (std::abs(forward.norm() - 1.0) > tol || std::abs(normal.norm() - 1.0) > tol) {
      throw ValidationError("palm frame vectors must be unit length");
    }
    if (std::abs(forward.dot(normal)) > tol) {
      throw ValidationError("palm frame forward and normal must be orthogonal");
    }
  }

  /// Columns (f, n, f x n).
  Mat3 basis() const {
    Mat3 b;
    b.col(0) = forward;
    b.col(1) = normal;
    b.col(2) = forward.cross(normal);
    return b;
  }

  PalmFrame transformed(const RigidTransform& tf) const {
    return {tf.apply(origin), tf.apply_vector(forward), tf.apply_vector(normal)};
  }

  bool operator==(const PalmFrame&) const = default;
};

struct Link {
  std::string name;
  TriMesh mesh;    // authored in the base frame at the open pose
  int parent = -1; // -1 for the base link
};

/// Revolute joint driving `child_link`; axis and pivot are expressed in the parent
/// link's frame.
struct Joint {
  std::size_t child_link = 0;
  Vec3 axis = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();
  double lower = 0.0;
  double upper = 0.0;
  double open_angle = 0.0;
};

struct Fingertip {
  std::size_t link = 0;
  Vec3 point = Vec3::Zero();
};

/// Optimization variables: base translation, base rotation in the 6D Gram-Schmidt
/// parametrization, and actuated joint values.
struct GripperConfig {
  Vec3 translation = Vec3::Zero();
  Rot6d rotation_6d = (Rot6d() << 1, 0, 0, 0, 1, 0).finished();
  VecX theta;

  static constexpr int kPoseDims = 9;

  std::size_t dims() const { return kPoseDims + static_cast<std::size_t>(theta.size()); }

  VecX to_vector() const {
    VecX p(dims());
    p << translation, rotation_6d, theta;
    return p;
  }

  static GripperConfig from_vector(const VecX& p) {
    GripperConfig c;
    c.translation = p.head<3>();
    c.rotation_6d = p.segment<6>(3);
    c.theta = p.tail(p.size() - kPoseDims);
    return c;
  }

  Mat3 rotation() const { return rot6d_to_matrix(rotation_6d); }
  RigidTransform base_transform() const { return {rotation(), translation}; }

  bool operator==(const GripperConfig& o) const {
    return translation == o.translation && rotation_6d == o.rotation_6d && theta.size() == o.theta.size() &&
           theta == o.theta;
  }
};

/// Kinematic tree of rigid links connected by revolute joints. Links are ordered so
/// that every parent precedes its children; link 0 is the base.
class GripperModel {
 public:
  GripperModel() = default;

  GripperModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
               std::vector<Fingertip> fingertips, PalmFrame palm, std::optional<MatX> coupling = {})
      : name_(std::move(name)), links_(std::move(links)), joints_(std::move(joints)),
        fingertips_(std::move(fingertips)), palm_(palm) {
    coupling_ = coupling ? *coupling : MatX::Identity(joints_.size(), joints_.size());
    validate_and_index();
  }

  const std::string& name() const { return name_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<Joint>& joints() const { return joints_; }
  const std::vector<Fingertip>& fingertips() const { return fingertips_; }
  const PalmFrame& palm_frame() const { return palm_; }
  const MatX& coupling() const { return coupling_; }
  std::size_t dof_count() const { return static_cast<std::size_t>(coupling_.cols()); }
  std::size_t link_count() const { return links_.size(); }

  /// Joint index driving a link, or -1 for the base.
  int joint_of_link(std::size_t link) const { return joint_of_link_[link]; }
  /// Joints between the base and the link (inclusive), root first.
  const std::vector<std::size_t>& chain(std::size_t link) const { return chains_[link]; }

  const VecX& lower_limits() const { return lower_; }
  const VecX& upper_limits() const { return upper_; }
  const VecX& open_theta() const { return open_; }

  /// Value of each actuated DOF towards its fully closed limit.
  double closed_value(std::size_t dof) const {
    return (upper_[dof] - open_[dof]) >= (open_[dof] - lower_[dof]) ? upper_[dof] : lower_[dof];
  }

  bool adjacent(std::size_t a, std::size_t b) const {
    return links_[a].parent == static_cast<int>(b) || links_[b].parent == static_cast<int>(a);
  }

  /// Links moved by an actuated DOF (any link whose chain contains a joint it drives).
  std::vector<std::size_t> links_moved_by(std::size_t dof) const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < links_.size(); ++l) {
      for (std::size_t j : chains_[l]) {
        if (coupling_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(dof)) != 0.0) {
          out.push_back(l);
          break;
        }
      }
    }
    return out;
  }

  /// Index of the base child that roots the finger containing `link`.
  std::size_t finger_of(std::size_t link) const {
    while (links_[link].parent > 0) link = static_cast<std::size_t>(links_[link].parent);
    return link;
  }

  VecX joint_angles(const VecX& theta) const { return coupling_ * theta; }

  VecX clamp(const VecX& theta) const { return theta.cwiseMax(lower_).cwiseMin(upper_); }

 private:
  void validate_and_index() {
    if (links_.empty()) throw ValidationError("gripper has no links");
    if (links_[0].parent != -1) throw ValidationError("link 0 must be the base link");
    joint_of_link_.assign(links_.size(), -1);
    for (std::size_t l = 1; l < links_.size(); ++l) {
      const int p = links_[l].parent;
      if (p < 0 || p >= static_cast<int>(l)) {
        throw ValidationError("link '" + links_[l].name + "' must have a parent declared before it");
      }
    }
    for (std::size_t l = 0; l < links_.size(); ++l) {
      if (links_[l].mesh.empty()) throw ValidationError("link '" + links_[l].name + "' has no mesh");
    }
    for (std::size_t j = 0; j < joints_.size(); ++j) {
      const Joint& jt = joints_[j];
      if (jt.child_link == 0 || jt.child_link >= links_.size()) {
        throw ValidationError("joint " + std::to_string(j) + " has an invalid child link");
      }
      if (joint_of_link_[jt.child_link] != -1) {
        throw ValidationError("link '" + links_[jt.child_link].name + "' is driven by two joints");
      }
      if (std::abs(jt.axis.norm() - 1.0) > 1e-6) {
        throw ValidationError("joint " + std::to_string(j) + " axis is not unit length");
      }
      if (!(jt.lower <= jt.open_angle && jt.open_angle <= jt.upper)) {
        throw ValidationError("joint " + std::to_string(j) + " open angle outside its limits");
      }
      joint_of_link_[jt.child_link] = static_cast<int>(j);
    }
    for (std::size_t l = 1; l < links_.size(); ++l) {
      if (joint_of_link_[l] < 0) throw ValidationError("link '" + links_[l].name + "' has no joint");
    }
    chains_.assign(links_.size(), {});
    for (std::size_t l = 1; l < links_.size(); ++l) {
      chains_[l] = chains_[static_cast<std::size_t>(links_[l].parent)];
      chains_[l].push_back(static_cast<std::size_t>(joint_of_link_[l]));
    }
    for (const Fingertip& f : fingertips_) {
      if (f.link >= links_.size()) throw ValidationError("fingertip refers to an unknown link");
    }
    palm_.validate();

    if (coupling_.rows() != static_cast<Eigen::Index>(joints_.size())) {
      throw ValidationError("coupling matrix must have one row per joint");
    }
    const auto n = coupling_.cols();
    lower_.resize(n);
    upper_.resize(n);
    open_.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      std::optional<double> open;
      for (Eigen::Index j = 0; j < coupling_.rows(); ++j) {
        const double c = coupling_(j, k);
        if (c == 0.0) continue;
        const Joint& jt = joints_[static_cast<std::size_t>(j)];
        double a = jt.lower / c;
        double b = jt.upper / c;
        if (a > b) std::swap(a, b);
        lo = std::max(lo, a);
        hi = std::min(hi, b);
        const double o = jt.open_angle / c;
        if (open && std::abs(*open - o) > 1e-9) {
          throw ValidationError("coupled joints disagree on the open value of DOF " + std::to_string(k));
        }
        open = o;
      }
      if (!open) throw ValidationError("actuated DOF " + std::to_string(k) + " drives no joint");
      if (lo > hi) throw ValidationError("actuated DOF " + std::to_string(k) + " has empty limits");
      lower_[k] = lo;
      upper_[k] = hi;
      open_[k] = *open;
    }
    for (Eigen::Index j = 0; j < coupling_.rows(); ++j) {
      if ((coupling_.row(j).array() != 0.0).count() != 1) {
        throw ValidationError("each joint must be driven by exactly one actuated DOF");
      }
    }
  }

  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<Fingertip> fingertips_;
  PalmFrame palm_;
  MatX coupling_;
  std::vector<int> joint_of_link_;
  std::vector<std::vector<std::size_t>> chains_;
  VecX lower_, upper_, open_;
};

inline GripperConfig open_config(const GripperModel& model) {
  GripperConfig c;
  c.theta = model.open_theta();
  return c;
}

/// Gripper posed in the world (object) frame.
struct PosedGripper {
  GripperConfig config;                       // with theta clamped to limits
  bool clamped = false;
  RigidTransform base;                        // base frame -> world
  std::vector<RigidTransform> link_world;     // link-local -> world
  std::vector<Vec3> joint_axes;               // world frame
  std::vector<Vec3> joint_pivots;             // world frame
  std::vector<Vec3> points;                   // all link samples, link-major order
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> sample_link;
  std::vector<std::uint32_t> link_offsets;    // link l owns [offsets[l], offsets[l+1])
  std::vector<Vec3> fingertips;
  PalmFrame palm;
  KdTree index;

  std::size_t sample_count() const { return points.size(); }
};

/// Posed triangle geometry and samples of all links merged into one mesh.
inline TriMesh posed_mesh(const GripperModel& model, const PosedGripper& posed) {
  std::vector<TriMesh> parts;
  parts.reserve(model.link_count());
  for (std::size_t l = 0; l < model.link_count(); ++l) {
    parts.push_back(model.links()[l].mesh.transformed(posed.link_world[l]));
  }
  return merge_meshes(parts);
}

inline PosedGripper forward_kinematics(const GripperModel& model, const GripperConfig& config) {
  if (static_cast<std::size_t>(config.theta.size()) != model.dof_count()) {
    throw ValidationError("configuration has " + std::to_string(config.theta.size()) +
                          " joint values, gripper expects " + std::to_string(model.dof_count()));
  }
  if (!config.translation.allFinite() || !config.theta.allFinite()) {
    throw NumericalError("non-finite gripper configuration");
  }
  PosedGripper out;
  out.config = config;
  out.config.theta = model.clamp(config.theta);
  out.clamped = out.config.theta != config.theta;
  out.base = config.base_transform();

  const VecX angles = model.joint_angles(out.config.theta);
  const std::size_t L = model.link_count();
  std::vector<RigidTransform> local(L);  // link-local -> base frame
  out.link_world.resize(L);
  out.joint_axes.resize(model.joints().size());
  out.joint_pivots.resize(model.joints().size());
  for (std::size_t l = 0; l < L; ++l) {
    if (l == 0) {
      local[l] = RigidTransform{};
    } else {
      const auto parent = static_cast<std::size_t>(model.links()[l].parent);
      const auto j = static_cast<std::size_t>(model.joint_of_link(l));
      const Joint& jt = model.joints()[j];
      const Mat3 rot = axis_angle(jt.axis, angles[static_cast<Eigen::Index>(j)] - jt.open_angle);
      const RigidTransform about_pivot{rot, jt.pivot - rot * jt.pivot};
      local[l] = local[parent] * about_pivot;
      const RigidTransform parent_world = out.base * local[parent];
      out.joint_axes[j] = parent_world.apply_vector(jt.axis);
      out.joint_pivots[j] = parent_world.apply(jt.pivot);
    }
    out.link_world[l] = out.base * local[l];
  }

  out.link_offsets.reserve(L + 1);
  for (std::size_t l = 0; l < L; ++l) {
    out.link_offsets.push_back(static_cast<std::uint32_t>(out.points.size()));
    const TriMesh& mesh = model.links()[l].mesh;
    const RigidTransform& tf = out.link_world[l];
    for (std::size_t s = 0; s < mesh.sample_points().size(); ++s) {
      out.points.push_back(tf.apply(mesh.sample_points()[s]));
      out.normals.push_back(tf.apply_vector(mesh.sample_normals()[s]));
      out.sample_link.push_back(static_cast<std::uint32_t>(l));
    }
  }
  out.link_offsets.push_back(static_cast<std::uint32_t>(out.points.size()));
  for (const Fingertip& f : model.fingertips()) out.fingertips.push_back(out.link_world[f.link].apply(f.point));
  out.palm = model.palm_frame().transformed(out.base);
  out.index = KdTree(out.points);
  return out;
}

/// First-order sensitivities of posed points and directions with respect to the
/// flattened configuration (translation, rotation_6d, theta).
class PoseJacobian {
 public:
  PoseJacobian(const GripperModel& model, const PosedGripper& posed)
      : model_(model), posed_(posed), dR_(rot6d_jacobian(posed.config.rotation_6d)) {
    for (int k = 0; k < 6; ++k) dR_world_[k] = dR_[k] * posed.base.rotation.transpose();
  }

  std::size_t dims() const { return GripperConfig::kPoseDims + model_.dof_count(); }

  /// grad += (dx/dp)^T v for a world point x rigidly attached to `link`.
  void add_point(std::size_t link, const Vec3& x, const Vec3& v, VecX& grad) const {
    grad.head<3>() += v;
    const Vec3 rel = x - posed_.base.translation;
    for (int k = 0; k < 6; ++k) grad[3 + k] += v.dot(dR_world_[k] * rel);
    for (std::size_t j : model_.chain(link)) {
      const double dphi = posed_.joint_axes[j].dot((x - posed_.joint_pivots[j]).cross(v));
      add_joint(j, dphi, grad);
    }
  }

  /// grad += (dd/dp)^T v for a world direction d rigidly attached to `link`.
  void add_direction(std::size_t link, const Vec3& d, const Vec3& v, VecX& grad) const {
    for (int k = 0; k < 6; ++k) grad[3 + k] += v.dot(dR_world_[k] * d);
    for (std::size_t j : model_.chain(link)) add_joint(j, posed_.joint_axes[j].dot(d.cross(v)), grad);
  }

 private:
  void add_joint(std::size_t j, double dphi, VecX& grad) const {
    const auto& c = model_.coupling();
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
      const double w = c(static_cast<Eigen::Index>(j), k);
      if (w != 0.0) grad[GripperConfig::kPoseDims + k] += w * dphi;
    }
  }

  const GripperModel& model_;
  const PosedGripper& posed_;
  std::array<Mat3, 6> dR_;
  std::array<Mat3, 6> dR_world_;
};

/// Human demonstration, already posed in the object frame.
struct HandDemo {
  TriMesh hand_mesh;
  PalmFrame palm_frame;
  RigidTransform base_pose;

  void validate() const {
    if (hand_mesh.empty()) throw ValidationError("hand mesh is empty");
    palm_frame.validate();
    const Mat3& r = base_pose.rotation;
    if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
        std::abs(r.determinant() - 1.0) > 1e-6) {
      throw ValidationError("hand base rotation is not a proper rotation");
    }
  }
};

/// Base pose that makes the gripper's posed palm frame coincide with the demo's,
/// with every joint at its open value.
inline GripperConfig initial_config_from_hand(const GripperModel& model, const HandDemo& demo) {
  const PalmFrame& g = model.palm_frame();
  const PalmFrame& h = demo.palm_frame;
  const Mat3 rot = h.basis() * g.basis().transpose();
  GripperConfig c;
  c.rotation_6d = matrix_to_rot6d(rot);
  const Mat3 r = rot6d_to_matrix(c.rotation_6d);
  c.translation = h.origin - r * g.origin;
  c.theta = model.open_theta();
  return c;
}

}  // namespace graspmimic
