#pragma once

// Finite-difference validation of the frozen-correspondence loss gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/losses.hpp"
#include "graspmimic/random.hpp"
#include "graspmimic/rotation.hpp"

namespace graspmimic {

struct GradCheckOptions {
  std::size_t configurations = 20;
  double step = 1e-5;
  /// Coordinates are compared relative to max(|analytic|, |numeric|, floor), with
  /// floor = floor_fraction * (largest numeric component of that gradient). One step of
  /// translation moves every sample by the full step, so small net components that
  /// come from cancelling contributions carry the truncation error of the large ones.
  double floor_fraction = 1.0;
  double translation_jitter = 0.01;
  double rotation_jitter = 0.2;  // radians
  double limit_margin = 0.02;    // radians kept clear of the joint limits
  /// Frozen pair distances must exceed distance_margin * step; every absolute-value
  /// argument must stay clear of zero by kink_margin times its variation over one step.
  double distance_margin = 50.0;
  double kink_margin = 2.0;
  std::size_t max_attempts = 1000;  // draws per accepted configuration
  std::uint64_t seed = 0;
  bool corrupt = false;  // scale analytic gradients by 1.01 to exercise the failure path
};

struct GradCheckTermResult {
  std::string term;
  double max_relative_error = 0.0;
  std::size_t configurations = 0;
  std::size_t active = 0;  // configurations where the term was nonzero
};

/// Pose near `center` with jittered translation and orientation and joint values drawn
/// uniformly away from the limits, so the kinematics clamp stays inactive.
inline GripperConfig random_smooth_config(const GripperModel& model, const GripperConfig& center,
                                          const GradCheckOptions& options, Rng& rng) {
  GripperConfig c = center;
  for (int k = 0; k < 3; ++k) c.translation[k] += rng.uniform(-options.translation_jitter, options.translation_jitter);
  const Vec3 axis = rng.normal3().normalized();
  const Mat3 r = axis_angle(axis, rng.uniform(0.0, options.rotation_jitter)) * center.rotation();
  c.rotation_6d = matrix_to_rot6d(r);
  // Unnormalized columns exercise the Gram-Schmidt Jacobian away from unit length.
  c.rotation_6d.head<3>() *= rng.uniform(0.5, 2.0);
  c.rotation_6d.tail<3>() *= rng.uniform(0.5, 2.0);
  const VecX lo = model.lower_limits();
  const VecX hi = model.upper_limits();
  for (Eigen::Index j = 0; j < c.theta.size(); ++j) {
    const double a = lo[j] + options.limit_margin;
    const double b = hi[j] - options.limit_margin;
    c.theta[j] = a < b ? rng.uniform(a, b) : 0.5 * (lo[j] + hi[j]);
  }
  return c;
}

/// Whether the frozen objective is smooth over the whole finite-difference stencil:
/// no frozen pair is nearly coincident (the norm is singular there) and no
/// absolute-value or L1 argument can change sign within one step.
inline bool stencil_is_smooth(const ObjectiveContext& ctx, const PosedGripper& posed, const Correspondences& corr,
                              const GradCheckOptions& options) {
  const double min_dist = options.distance_margin * options.step;
  const auto& opts = ctx.object->sample_points();
  const auto& gpts = posed.points;
  const auto far_enough = [&](const Vec3& a, const Vec3& b) { return (a - b).norm() > min_dist; };
  for (std::size_t i = 0; i < opts.size(); ++i) {
    const Vec3& g = gpts[corr.object_nearest[i]];
    if (!far_enough(g, opts[i])) return false;
    const double hr = std::exp(-(g - opts[i]).norm() / ctx.hp.tau);
    // One step moves a sample by at most ~step, changing hr by hr * step / tau.
    const double variation = hr * options.step / ctx.hp.tau;
    if (std::abs(ctx.hand_heatmap->values[i] - hr) < options.kink_margin * variation) return false;
  }
  for (std::size_t k = 0; k < gpts.size(); ++k) {
    if (!far_enough(gpts[k], opts[corr.gripper_nearest[k]])) return false;
  }
  for (const SelfContact& sc : corr.self) {
    if (!far_enough(gpts[sc.sample], gpts[sc.other_sample])) return false;
  }
  for (std::size_t f = 0; f < posed.fingertips.size() && !ctx.contact_region.empty(); ++f) {
    if (!far_enough(posed.fingertips[f], ctx.contact_region[corr.fingertip_nearest[f]])) return false;
  }
  const Vec3 dn = posed.palm.normal - ctx.hand_frame.normal;
  const Vec3 df = posed.palm.forward - ctx.hand_frame.forward;
  // A 6D step of size h turns a palm vector by at most ~2h / (column length >= 0.5).
  const double turn = 4.0 * options.step;
  return dn.cwiseAbs().minCoeff() > options.kink_margin * turn && df.cwiseAbs().minCoeff() > options.kink_margin * turn;
}

inline double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return denom > 0.0 ? std::abs(analytic - numeric) / denom : 0.0;
}

/// Central differences of the masked frozen objective at `config`.
inline VecX numeric_gradient(const ObjectiveContext& ctx, const GripperConfig& config, const Correspondences& corr,
                             const TermMask& mask, double step) {
  const VecX x = config.to_vector();
  VecX g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    VecX xp = x;
    VecX xm = x;
    xp[i] += step;
    xm[i] -= step;
    const double fp = frozen_objective(ctx, GripperConfig::from_vector(xp), corr, mask);
    const double fm = frozen_objective(ctx, GripperConfig::from_vector(xm), corr, mask);
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Largest per-coordinate relative error between analytic and numeric gradients.
inline double gradient_discrepancy(const VecX& analytic, const VecX& numeric, double floor_fraction) {
  const double floor = floor_fraction * numeric.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  }
  return worst;
}

/// Compares analytic and numeric gradients of each named term at random
/// configurations around `center`.
inline std::vector<GradCheckTermResult> check_gradients(const ObjectiveContext& ctx, const GripperConfig& center,
                                                        std::span<const std::string> terms,
                                                        const GradCheckOptions& options) {
  if (options.configurations == 0) throw ValidationError("gradient check needs at least one configuration");
  if (!(options.step > 0.0)) throw ValidationError("finite-difference step must be positive");
  std::vector<TermMask> masks;
  std::vector<GradCheckTermResult> results;
  for (const std::string& t : terms) {
    masks.push_back(TermMask::only(t));
    results.push_back({t, 0.0, 0, 0});
  }
  Rng rng(options.seed);
  for (std::size_t n = 0; n < options.configurations; ++n) {
    GripperConfig config;
    PosedGripper posed;
    Correspondences corr;
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt == options.max_attempts) throw NumericalError("no smooth configuration found for the gradient check");
      config = random_smooth_config(*ctx.model, center, options, rng);
      posed = forward_kinematics(*ctx.model, config);
      corr = compute_correspondences(ctx, posed);
      if (stencil_is_smooth(ctx, posed, corr, options)) break;
    }
    for (std::size_t t = 0; t < masks.size(); ++t) {
      VecX analytic;
      const LossBreakdown value = evaluate_objective(ctx, posed, corr, masks[t], &analytic);
      if (options.corrupt) analytic *= 1.01;
      const VecX numeric = numeric_gradient(ctx, config, corr, masks[t], options.step);
      GradCheckTermResult& r = results[t];
      r.configurations += 1;
      if (value.objective > 0.0) r.active += 1;
      r.max_relative_error = std::max(r.max_relative_error,
                                      gradient_discrepancy(analytic, numeric, options.floor_fraction));
    }
  }
  return results;
}

}  // namespace graspmimic
