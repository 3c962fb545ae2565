#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/SVD>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/losses.hpp"
#include "graspmimic/penetration.hpp"
#include "graspmimic/random.hpp"

namespace graspmimic {

/// Friction-cone discretization and torque normalization used for grasp wrenches.
struct WrenchModel {
  double friction_mu = 1.0;
  int cone_edges = 8;
  double torque_scale = 0.0;  // <= 0: reciprocal of the largest contact moment arm
  double contact_delta = 0.002;

  void validate() const {
    if (!(friction_mu > 0.0)) throw ValidationError("friction coefficient must be positive");
    if (cone_edges < 3) throw ValidationError("friction cone needs at least 3 edges");
    if (!(contact_delta > 0.0)) throw ValidationError("contact delta must be positive");
  }

  bool operator==(const WrenchModel&) const = default;
};

struct Contact {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // outward object normal
};

using Wrench = Eigen::Matrix<double, 6, 1>;

/// Object samples closer than `contact_delta` to the gripper, greedily clustered
/// (radius 2 * contact_delta) into representative contacts.
inline std::vector<Contact> extract_contacts(const KdTree& gripper_index, const TriMesh& object,
                                             double contact_delta) {
  const auto& pts = object.sample_points();
  const auto& nrm = object.sample_normals();
  std::vector<std::uint32_t> touching;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (gripper_index.nearest(pts[i]).distance() < contact_delta) touching.push_back(static_cast<std::uint32_t>(i));
  }
  const double radius2 = 4.0 * contact_delta * contact_delta;
  std::vector<bool> used(touching.size(), false);
  std::vector<Contact> out;
  for (std::size_t a = 0; a < touching.size(); ++a) {
    if (used[a]) continue;
    const Vec3 seed = pts[touching[a]];
    Vec3 sum_p = Vec3::Zero();
    Vec3 sum_n = Vec3::Zero();
    int count = 0;
    for (std::size_t b = a; b < touching.size(); ++b) {
      if (used[b] || (pts[touching[b]] - seed).squaredNorm() > radius2) continue;
      used[b] = true;
      sum_p += pts[touching[b]];
      sum_n += nrm[touching[b]];
      ++count;
    }
    const double len = sum_n.norm();
    out.push_back({sum_p / count, len > 0.0 ? Vec3(sum_n / len) : nrm[touching[a]]});
  }
  return out;
}

/// Primitive wrenches (force, scaled torque) of each friction-cone edge, with unit
/// normal force pressing into the object.
inline std::vector<Wrench> contact_wrenches(std::span<const Contact> contacts, const WrenchModel& model,
                                            const Vec3& centroid) {
  double scale = model.torque_scale;
  if (scale <= 0.0) {
    double arm = 0.0;
    for (const Contact& c : contacts) arm = std::max(arm, (c.point - centroid).norm());
    scale = arm > 0.0 ? 1.0 / arm : 1.0;
  }
  std::vector<Wrench> out;
  out.reserve(contacts.size() * static_cast<std::size_t>(model.cone_edges));
  for (const Contact& c : contacts) {
    const Vec3 inward = -c.normal.normalized();
    const Vec3 helper = std::abs(inward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 t1 = inward.cross(helper).normalized();
    const Vec3 t2 = inward.cross(t1);
    for (int e = 0; e < model.cone_edges; ++e) {
      const double phi = 2.0 * std::numbers::pi * e / model.cone_edges;
      const Vec3 f = inward + model.friction_mu * (std::cos(phi) * t1 + std::sin(phi) * t2);
      Wrench w;
      w << f, scale * (c.point - centroid).cross(f);
      out.push_back(w);
    }
  }
  return out;
}

/// Support function of the wrench hull in direction d.
inline double wrench_support(std::span<const Wrench> wrenches, const Wrench& d) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Wrench& w : wrenches) best = std::max(best, w.dot(d));
  return best;
}

/// Deterministic unit directions in R^6.
inline std::vector<Wrench> sample_directions(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Wrench> out;
  out.reserve(count);
  while (out.size() < count) {
    Wrench d;
    for (int k = 0; k < 6; ++k) d[k] = rng.normal();
    const double n = d.norm();
    if (n > 1e-12) out.push_back(d / n);
  }
  return out;
}

/// True when the wrenches span fewer than six dimensions, so the origin cannot be
/// interior to their hull.
inline bool wrench_rank_deficient(std::span<const Wrench> wrenches) {
  if (wrenches.size() < 6) return true;
  Eigen::Matrix<double, 6, Eigen::Dynamic> m(6, static_cast<Eigen::Index>(wrenches.size()));
  for (std::size_t i = 0; i < wrenches.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = wrenches[i];
  const Eigen::JacobiSVD<MatX> svd(m);
  const auto& s = svd.singularValues();
  return s[5] <= 1e-9 * s[0];
}

struct EpsilonResult {
  double epsilon = 0.0;
  bool force_closure = false;

  bool operator==(const EpsilonResult&) const = default;
};

/// min over the given directions of the hull support function; an upper bound on
/// the true epsilon when the origin is interior.
inline double dense_support_minimum(std::span<const Wrench> wrenches, std::span<const Wrench> directions) {
  double best = std::numeric_limits<double>::infinity();
  for (const Wrench& d : directions) best = std::min(best, wrench_support(wrenches, d));
  return best;
}

/// Radius of the largest origin-centred ball inside the wrench hull, estimated as the
/// minimum support value over sampled directions followed by coordinate descent on
/// the sphere from the ten best samples.
inline EpsilonResult epsilon_from_wrenches(std::span<const Wrench> wrenches, std::size_t direction_samples,
                                           std::uint64_t seed) {
  if (direction_samples < 1000) throw ValidationError("epsilon quality needs at least 1000 directions");
  if (wrenches.empty() || wrench_rank_deficient(wrenches)) return {};

  const std::vector<Wrench> dirs = sample_directions(direction_samples, seed);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(dirs.size());
  for (std::size_t i = 0; i < dirs.size(); ++i) scored.emplace_back(wrench_support(wrenches, dirs[i]), i);
  const std::size_t starts = std::min<std::size_t>(10, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(starts), scored.end());

  double best = scored.front().first;
  for (std::size_t s = 0; s < starts; ++s) {
    Wrench d = dirs[scored[s].second];
    double value = scored[s].first;
    double step = 0.1;
    for (int iter = 0; iter < 4000 && step > 1e-9; ++iter) {
      bool improved = false;
      for (int k = 0; k < 6 && !improved; ++k) {
        for (double sign : {1.0, -1.0}) {
          Wrench trial = d;
          trial[k] += sign * step;
          trial.normalize();
          const double tv = wrench_support(wrenches, trial);
          if (tv < value) {
            d = trial;
            value = tv;
            improved = true;
            break;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    best = std::min(best, value);
  }
  if (!(best > 0.0)) return {};
  return {best, true};
}

inline EpsilonResult epsilon_quality(std::span<const Contact> contacts, const WrenchModel& model,
                                     const Vec3& centroid, std::size_t direction_samples, std::uint64_t seed) {
  model.validate();
  if (direction_samples < 1000) throw ValidationError("epsilon quality needs at least 1000 directions");
  if (contacts.size() < 2) return {};
  const std::vector<Wrench> w = contact_wrenches(contacts, model, centroid);
  return epsilon_from_wrenches(w, direction_samples, seed);
}

/// Evaluation quantities; lengths in cm and volumes in cm^3.
struct MetricsReport {
  double epsilon_quality = 0.0;
  bool force_closure = false;
  double max_penetration_depth_cm = 0.0;
  double penetration_volume_cm3 = 0.0;
  double orientation_difference = 0.0;
  double contact_heatmap_difference = 0.0;
  std::size_t contact_count = 0;

  bool operator==(const MetricsReport&) const = default;
};

struct MetricsSettings {
  std::size_t volume_samples = 100000;
  std::size_t direction_samples = 5000;
  std::uint64_t seed = 0;
};

inline MetricsReport evaluate_grasp(const TriMesh& object, const HandDemo& demo, const GripperModel& model,
                                    const GripperConfig& config, const Hyperparams& hp,
                                    const WrenchModel& wrench_model, const MetricsSettings& settings) {
  const PosedGripper posed = forward_kinematics(model, config);
  MetricsReport r;
  r.orientation_difference = loss_orientation(posed.palm, demo.palm_frame);
  const ContactHeatmap hand = contact_heatmap(object, demo.hand_mesh.index(), hp.tau);
  const ContactHeatmap robot = contact_heatmap(object, posed.index, hp.tau);
  r.contact_heatmap_difference = loss_contact(hand, robot).mean;

  const TriMesh gripper = posed_mesh(model, posed);
  r.max_penetration_depth_cm = 100.0 * max_penetration_depth(gripper, object);
  r.penetration_volume_cm3 = 1e6 * penetration_volume(gripper, object, settings.volume_samples, settings.seed);

  const std::vector<Contact> contacts = extract_contacts(posed.index, object, wrench_model.contact_delta);
  r.contact_count = contacts.size();
  const EpsilonResult eps =
      epsilon_quality(contacts, wrench_model, object.centroid(), settings.direction_samples, settings.seed);
  r.epsilon_quality = eps.epsilon;
  r.force_closure = eps.force_closure;
  return r;
}

}  // namespace graspmimic
