#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/mesh.hpp"
#include "graspmimic/penetration.hpp"

namespace graspmimic {

/// Weights and length scales of the retargeting objective. Lengths in meters.
struct Hyperparams {
  double lambda_contact = 10.0;
  double lambda_orientation = 10.0;
  double lambda_interpen = 0.5;
  double lambda_self = 1.0;
  double tau = 0.01;
  double delta = 0.002;
  double alpha1 = 2.4;
  double beta1 = 7.0;
  double gamma1 = 0.001;
  double alpha2 = 0.04;
  double beta2 = 0.06;
  double heatmap_contact_threshold = 0.5;

  void validate() const {
    for (double len : {tau, delta, alpha2, beta2}) {
      if (!(len > 0.0)) throw ValidationError("hyperparameter lengths must be positive");
    }
    for (double w : {lambda_contact, lambda_orientation, lambda_interpen, lambda_self, alpha1, beta1, gamma1}) {
      if (!(w >= 0.0)) throw ValidationError("hyperparameter weights must be non-negative");
    }
    if (!(heatmap_contact_threshold > 0.0 && heatmap_contact_threshold < 1.0)) {
      throw ValidationError("heatmap contact threshold must lie in (0, 1)");
    }
  }

  bool operator==(const Hyperparams&) const = default;
};

/// Per-object-sample proximity field exp(-d / tau), aligned with the object samples.
struct ContactHeatmap {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const ContactHeatmap&) const = default;
};

inline ContactHeatmap contact_heatmap(std::span<const Vec3> object_points, const KdTree& other, double tau) {
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  ContactHeatmap h;
  h.values.reserve(object_points.size());
  for (const Vec3& p : object_points) h.values.push_back(std::exp(-other.nearest(p).distance() / tau));
  return h;
}

inline ContactHeatmap contact_heatmap(const TriMesh& object, const KdTree& other, double tau) {
  return contact_heatmap(object.sample_points(), other, tau);
}

struct ContactLoss {
  double sum = 0.0;
  double mean = 0.0;
};

inline ContactLoss loss_contact(const ContactHeatmap& hand, const ContactHeatmap& robot) {
  if (hand.size() != robot.size()) throw ValidationError("heatmaps have different lengths");
  ContactLoss out;
  for (std::size_t i = 0; i < hand.size(); ++i) out.sum += std::abs(hand.values[i] - robot.values[i]);
  out.mean = hand.size() ? out.sum / static_cast<double>(hand.size()) : 0.0;
  return out;
}

inline double loss_orientation(const PalmFrame& robot, const PalmFrame& hand) {
  return (robot.normal - hand.normal).lpNorm<1>() + (robot.forward - hand.forward).lpNorm<1>();
}

inline double interpen_combination(double push, double pull, double normal, const Hyperparams& hp) {
  return hp.alpha1 * push + hp.beta1 * pull + hp.gamma1 * normal;
}

/// Objective terms; `total` is always the full weighted sum, `objective` is the
/// masked quantity an optimizer actually minimizes.
struct LossBreakdown {
  double total = 0.0;
  double objective = 0.0;
  double contact = 0.0;
  double orientation = 0.0;
  double interpen = 0.0;
  double push = 0.0;
  double pull = 0.0;
  double normal = 0.0;
  double self_pen = 0.0;
  double fingertip = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

/// Which terms contribute to the optimized objective (and its gradient).
struct TermMask {
  bool contact = true;
  bool orientation = true;
  bool push = true;
  bool pull = true;
  bool normal = true;
  bool self_pen = true;
  bool fingertip = false;

  static TermMask none() { return {false, false, false, false, false, false, false}; }
  static TermMask full() { return {}; }
  static TermMask only(const std::string& term) {
    TermMask m = none();
    if (term == "contact") m.contact = true;
    else if (term == "orientation") m.orientation = true;
    else if (term == "push") m.push = true;
    else if (term == "pull") m.pull = true;
    else if (term == "normal") m.normal = true;
    else if (term == "interpen") m.push = m.pull = m.normal = true;
    else if (term == "self_pen") m.self_pen = true;
    else if (term == "fingertip") m.fingertip = true;
    else throw ValidationError("unknown loss term '" + term + "'");
    return m;
  }
  bool any() const { return contact || orientation || push || pull || normal || self_pen || fingertip; }
  bool operator==(const TermMask&) const = default;
};

inline const std::vector<std::string>& term_names() {
  static const std::vector<std::string> names{"contact", "orientation", "push", "pull",
                                              "normal", "self_pen", "fingertip"};
  return names;
}

/// Everything the objective needs besides the configuration.
struct ObjectiveContext {
  const GripperModel* model = nullptr;
  const TriMesh* object = nullptr;
  const ContactHeatmap* hand_heatmap = nullptr;
  PalmFrame hand_frame;
  Hyperparams hp;
  std::vector<Vec3> contact_region;  // fingertip attraction targets
};

struct SelfContact {
  std::uint32_t sample = 0;       // penetrating gripper sample
  std::uint32_t other_sample = 0; // nearest sample of the penetrated link
};

/// Discrete assignments frozen at one pose: nearest neighbours, containment and
/// contact sets. Within one gradient evaluation they are treated as constants.
struct Correspondences {
  std::vector<std::uint32_t> object_nearest;   // object sample -> gripper sample
  std::vector<std::uint32_t> gripper_nearest;  // gripper sample -> object sample
  PenetrationSets sets;
  std::vector<std::uint8_t> in_contact;        // gripper sample within delta of the object
  std::vector<SelfContact> self;
  std::vector<std::uint32_t> fingertip_nearest;
};

/// Link-local containment test of a world point against every link of a posed gripper.
inline bool posed_link_contains(const GripperModel& model, const PosedGripper& posed, std::size_t link,
                                const Vec3& world) {
  return model.links()[link].mesh.contains(posed.link_world[link].inverse_apply(world));
}

inline PenetrationSets penetration_sets(const GripperModel& model, const PosedGripper& posed,
                                        const TriMesh& object) {
  PenetrationSets sets;
  for (std::size_t k = 0; k < posed.points.size(); ++k) {
    if (object.contains(posed.points[k])) sets.inside_object.push_back(static_cast<std::uint32_t>(k));
  }
  const auto& pts = object.sample_points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t l = 0; l < model.link_count(); ++l) {
      if (posed_link_contains(model, posed, l, pts[i])) {
        sets.inside_gripper.push_back(static_cast<std::uint32_t>(i));
        break;
      }
    }
  }
  return sets;
}

/// Samples of one link inside another, non-adjacent link, with the nearest sample
/// of the penetrated link.
inline std::vector<SelfContact> self_contacts(const GripperModel& model, const PosedGripper& posed) {
  std::vector<SelfContact> out;
  const std::size_t L = model.link_count();
  for (std::size_t j = 0; j < L; ++j) {
    for (std::size_t k = 0; k < L; ++k) {
      if (j == k || model.adjacent(j, k)) continue;
      const TriMesh& other = model.links()[k].mesh;
      for (std::uint32_t s = posed.link_offsets[j]; s < posed.link_offsets[j + 1]; ++s) {
        const Vec3 local = posed.link_world[k].inverse_apply(posed.points[s]);
        if (!other.contains(local)) continue;
        const NearestHit hit = other.nearest_point(local);
        out.push_back({s, posed.link_offsets[k] + hit.index});
      }
    }
  }
  return out;
}

inline Correspondences compute_correspondences(const ObjectiveContext& ctx, const PosedGripper& posed) {
  const TriMesh& object = *ctx.object;
  Correspondences c;
  c.object_nearest.reserve(object.sample_points().size());
  for (const Vec3& p : object.sample_points()) c.object_nearest.push_back(posed.index.nearest(p).index);
  c.gripper_nearest.reserve(posed.points.size());
  c.in_contact.reserve(posed.points.size());
  for (const Vec3& p : posed.points) {
    const NearestHit hit = object.nearest_point(p);
    c.gripper_nearest.push_back(hit.index);
    c.in_contact.push_back(hit.distance() < ctx.hp.delta ? 1 : 0);
  }
  c.sets = penetration_sets(*ctx.model, posed, object);
  c.self = self_contacts(*ctx.model, posed);
  for (const Vec3& tip : posed.fingertips) {
    c.fingertip_nearest.push_back(
        ctx.contact_region.empty() ? 0u : brute_force_nearest(ctx.contact_region, tip).index);
  }
  return c;
}

namespace detail {
inline double sign(double x) { return static_cast<double>((x > 0.0) - (x < 0.0)); }

/// d tanh(|a - b| / scale) / da, zero when the points coincide.
inline Vec3 tanh_distance_grad(const Vec3& a, const Vec3& b, double scale) {
  const Vec3 diff = a - b;
  const double d = diff.norm();
  if (d == 0.0) return Vec3::Zero();
  const double t = std::tanh(d / scale);
  return (1.0 - t * t) / scale * diff / d;
}
}  // namespace detail

/// Evaluates every term at `posed` using frozen correspondences. When `grad` is
/// non-null it receives the gradient of the masked objective.
inline LossBreakdown evaluate_objective(const ObjectiveContext& ctx, const PosedGripper& posed,
                                        const Correspondences& corr, const TermMask& mask,
                                        VecX* grad = nullptr) {
  const GripperModel& model = *ctx.model;
  const TriMesh& object = *ctx.object;
  const Hyperparams& hp = ctx.hp;
  const auto& opts = object.sample_points();
  const auto& onrm = object.sample_normals();
  const auto& gpts = posed.points;

  std::optional<PoseJacobian> jac;
  if (grad) {
    jac.emplace(model, posed);
    *grad = VecX::Zero(static_cast<Eigen::Index>(jac->dims()));
  }
  const auto link_of = [&](std::uint32_t k) { return static_cast<std::size_t>(posed.sample_link[k]); };

  LossBreakdown b;

  // Contact heatmap difference through the frozen nearest gripper sample.
  const double w_contact = hp.lambda_contact;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    const std::uint32_t k = corr.object_nearest[i];
    const Vec3 diff = gpts[k] - opts[i];
    const double d = diff.norm();
    const double hr = std::exp(-d / hp.tau);
    const double hh = ctx.hand_heatmap->values[i];
    b.contact += std::abs(hh - hr);
    if (grad && mask.contact && d > 0.0) {
      const double s = detail::sign(hr - hh);
      if (s != 0.0) jac->add_point(link_of(k), gpts[k], w_contact * s * (-hr / hp.tau) * diff / d, *grad);
    }
  }

  // Orientation: L1 distance of palm vectors.
  {
    const Vec3 dn = posed.palm.normal - ctx.hand_frame.normal;
    const Vec3 df = posed.palm.forward - ctx.hand_frame.forward;
    b.orientation = dn.lpNorm<1>() + df.lpNorm<1>();
    if (grad && mask.orientation) {
      const double w = hp.lambda_orientation;
      const Vec3 sn = dn.unaryExpr([](double x) { return detail::sign(x); });
      const Vec3 sf = df.unaryExpr([](double x) { return detail::sign(x); });
      jac->add_direction(0, posed.palm.normal, w * sn, *grad);
      jac->add_direction(0, posed.palm.forward, w * sf, *grad);
    }
  }

  // Push: penetrating samples of either mesh, distance to the other sample set.
  const double w_push = hp.lambda_interpen * hp.alpha1;
  for (std::uint32_t i : corr.sets.inside_gripper) {
    const std::uint32_t k = corr.object_nearest[i];
    b.push += std::tanh((gpts[k] - opts[i]).norm() / hp.alpha2);
    if (grad && mask.push) {
      jac->add_point(link_of(k), gpts[k], w_push * detail::tanh_distance_grad(gpts[k], opts[i], hp.alpha2), *grad);
    }
  }
  for (std::uint32_t k : corr.sets.inside_object) {
    const std::uint32_t i = corr.gripper_nearest[k];
    b.push += std::tanh((gpts[k] - opts[i]).norm() / hp.alpha2);
    if (grad && mask.push) {
      jac->add_point(link_of(k), gpts[k], w_push * detail::tanh_distance_grad(gpts[k], opts[i], hp.alpha2), *grad);
    }
  }

  // Pull (saturated beyond delta) and normal opposition over the contact set.
  const double w_pull = hp.lambda_interpen * hp.beta1;
  const double w_normal = hp.lambda_interpen * hp.gamma1;
  const double saturated = std::tanh(hp.delta / hp.beta2);
  for (std::size_t k = 0; k < gpts.size(); ++k) {
    if (!corr.in_contact[k]) {
      b.pull += saturated;
      continue;
    }
    const std::uint32_t i = corr.gripper_nearest[k];
    const auto ku = static_cast<std::uint32_t>(k);
    b.pull += std::tanh((gpts[k] - opts[i]).norm() / hp.beta2);
    b.normal += 1.0 + posed.normals[k].dot(onrm[i]);
    if (grad && mask.pull) {
      jac->add_point(link_of(ku), gpts[k], w_pull * detail::tanh_distance_grad(gpts[k], opts[i], hp.beta2), *grad);
    }
    if (grad && mask.normal) jac->add_direction(link_of(ku), posed.normals[k], w_normal * onrm[i], *grad);
  }
  b.interpen = interpen_combination(b.push, b.pull, b.normal, hp);

  // Self-penetration: push between distinct, non-adjacent links.
  const double w_self = hp.lambda_self;
  for (const SelfContact& sc : corr.self) {
    const Vec3& a = gpts[sc.sample];
    const Vec3& o = gpts[sc.other_sample];
    b.self_pen += std::tanh((a - o).norm() / hp.alpha2);
    if (grad && mask.self_pen) {
      const Vec3 g = w_self * detail::tanh_distance_grad(a, o, hp.alpha2);
      jac->add_point(link_of(sc.sample), a, g, *grad);
      jac->add_point(link_of(sc.other_sample), o, -g, *grad);
    }
  }

  // Fingertip attraction to the demonstrated contact region.
  if (!ctx.contact_region.empty()) {
    for (std::size_t f = 0; f < posed.fingertips.size(); ++f) {
      const Vec3 diff = posed.fingertips[f] - ctx.contact_region[corr.fingertip_nearest[f]];
      const double d = diff.norm();
      b.fingertip += d;
      if (grad && mask.fingertip && d > 0.0) {
        jac->add_point(model.fingertips()[f].link, posed.fingertips[f], diff / d, *grad);
      }
    }
  }

  b.total = hp.lambda_contact * b.contact + hp.lambda_orientation * b.orientation +
            hp.lambda_interpen * b.interpen + hp.lambda_self * b.self_pen;
  const double masked_interpen = interpen_combination(mask.push ? b.push : 0.0, mask.pull ? b.pull : 0.0,
                                                      mask.normal ? b.normal : 0.0, hp);
  b.objective = (mask.contact ? hp.lambda_contact * b.contact : 0.0) +
                (mask.orientation ? hp.lambda_orientation * b.orientation : 0.0) +
                hp.lambda_interpen * masked_interpen + (mask.self_pen ? hp.lambda_self * b.self_pen : 0.0) +
                (mask.fingertip ? b.fingertip : 0.0);
  if (grad && !grad->allFinite()) throw NumericalError("non-finite loss gradient");
  if (!std::isfinite(b.objective) || !std::isfinite(b.total)) throw NumericalError("non-finite loss value");
  return b;
}

/// Full objective at a configuration, with correspondences recomputed there.
inline LossBreakdown total_loss(const ObjectiveContext& ctx, const GripperConfig& config,
                                const TermMask& mask = TermMask::full()) {
  const PosedGripper posed = forward_kinematics(*ctx.model, config);
  return evaluate_objective(ctx, posed, compute_correspondences(ctx, posed), mask);
}

struct LossAndGradient {
  LossBreakdown loss;
  VecX gradient;
};

/// Value and frozen-correspondence gradient of the masked objective with respect to
/// (translation, rotation_6d, theta).
inline LossAndGradient loss_gradient(const ObjectiveContext& ctx, const GripperConfig& config,
                                     const TermMask& mask) {
  const PosedGripper posed = forward_kinematics(*ctx.model, config);
  LossAndGradient out;
  out.loss = evaluate_objective(ctx, posed, compute_correspondences(ctx, posed), mask, &out.gradient);
  return out;
}

/// Masked objective with correspondences held fixed; the finite-difference reference.
inline double frozen_objective(const ObjectiveContext& ctx, const GripperConfig& config,
                               const Correspondences& corr, const TermMask& mask) {
  return evaluate_objective(ctx, forward_kinematics(*ctx.model, config), corr, mask).objective;
}

// Standalone forms of the individual terms over plain sample sets.

inline double loss_push(std::span<const Vec3> gripper_points, const KdTree& gripper_index,
                        const TriMesh& object, const PenetrationSets& sets, double alpha2) {
  double total = 0.0;
  for (std::uint32_t i : sets.inside_gripper) {
    total += std::tanh(gripper_index.nearest(object.sample_points()[i]).distance() / alpha2);
  }
  for (std::uint32_t k : sets.inside_object) {
    total += std::tanh(object.nearest_distance(gripper_points[k]) / alpha2);
  }
  return total;
}

inline double loss_push(const TriMesh& gripper, const TriMesh& object, const PenetrationSets& sets,
                        double alpha2) {
  return loss_push(gripper.sample_points(), gripper.index(), object, sets, alpha2);
}

inline double loss_pull(std::span<const Vec3> gripper_points, const TriMesh& object, double delta,
                        double beta2) {
  if (!(delta > 0.0)) throw ValidationError("delta must be positive");
  double total = 0.0;
  for (const Vec3& p : gripper_points) total += std::tanh(std::min(object.nearest_distance(p), delta) / beta2);
  return total;
}

inline double loss_normal(std::span<const Vec3> gripper_points, std::span<const Vec3> gripper_normals,
                          const TriMesh& object, double delta) {
  double total = 0.0;
  for (std::size_t k = 0; k < gripper_points.size(); ++k) {
    const NearestHit hit = object.nearest_point(gripper_points[k]);
    if (hit.distance() < delta) total += 1.0 + gripper_normals[k].dot(object.sample_normals()[hit.index]);
  }
  return total;
}

inline double loss_self_pen(const GripperModel& model, const PosedGripper& posed, double alpha2) {
  double total = 0.0;
  for (const SelfContact& sc : self_contacts(model, posed)) {
    total += std::tanh((posed.points[sc.sample] - posed.points[sc.other_sample]).norm() / alpha2);
  }
  return total;
}

struct FingertipLoss {
  double value = 0.0;
  bool empty_region = false;
};

inline FingertipLoss loss_fingertip_attraction(std::span<const Vec3> fingertips, std::span<const Vec3> region) {
  if (region.empty()) return {0.0, true};
  FingertipLoss out;
  for (const Vec3& t : fingertips) out.value += brute_force_nearest(region, t).distance();
  return out;
}

/// Object samples whose demonstrated heatmap exceeds the contact threshold.
inline std::vector<Vec3> contact_region(const TriMesh& object, const ContactHeatmap& hand, double threshold) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < hand.size(); ++i) {
    if (hand.values[i] > threshold) out.push_back(object.sample_points()[i]);
  }
  return out;
}

}  // namespace graspmimic
