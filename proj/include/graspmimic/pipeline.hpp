#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/losses.hpp"
#include "graspmimic/metrics.hpp"
#include "graspmimic/optim.hpp"

namespace graspmimic {

enum class FingerInit { ContactOptimization, Discrete };

inline std::string to_string(FingerInit f) {
  return f == FingerInit::Discrete ? "discrete" : "contact-optimization";
}

inline FingerInit finger_init_from_string(const std::string& s) {
  if (s == "contact-optimization") return FingerInit::ContactOptimization;
  if (s == "discrete") return FingerInit::Discrete;
  throw ValidationError("unknown finger_init_strategy '" + s + "'");
}

/// Per-term switches of the refinement objective (ablations).
struct LossToggles {
  bool contact = true;
  bool orientation = true;
  bool interpen = true;
  bool self_pen = true;

  TermMask mask() const {
    TermMask m = TermMask::none();
    m.contact = contact;
    m.orientation = orientation;
    m.push = m.pull = m.normal = interpen;
    m.self_pen = self_pen;
    return m;
  }
  static LossToggles none() { return {false, false, false, false}; }
  bool operator==(const LossToggles&) const = default;
};

struct RetargetRequest {
  TriMesh object;
  HandDemo demo;
  GripperModel model;
  Hyperparams hp;
  OptSchedule stage_b_schedule;
  OptSchedule stage_c_schedule;
  FingerInit finger_init = FingerInit::ContactOptimization;
  int discrete_bins = 20;
  LossToggles loss_mask;
  WrenchModel wrench_model;
  MetricsSettings metrics;
  std::uint64_t seed = 0;

  void validate() const {
    if (object.empty()) throw ValidationError("object mesh is empty");
    demo.validate();
    hp.validate();
    stage_b_schedule.validate();
    stage_c_schedule.validate();
    wrench_model.validate();
    if (discrete_bins < 1) throw ValidationError("discrete_bins must be at least 1");
  }
};

struct RetargetResult {
  GripperConfig stage_a;
  GripperConfig stage_b;
  GripperConfig final_config;
  LossBreakdown loss_a;
  LossBreakdown loss_b;
  LossBreakdown loss_final;
  std::vector<TraceEntry> stage_b_trace;
  std::vector<TraceEntry> stage_c_trace;
  MetricsReport metrics;
  std::vector<std::string> warnings;
};

inline ContactHeatmap hand_heatmap(const RetargetRequest& req) {
  return contact_heatmap(req.object, req.demo.hand_mesh.index(), req.hp.tau);
}

inline ObjectiveContext make_context(const RetargetRequest& req, const ContactHeatmap& hand) {
  ObjectiveContext ctx;
  ctx.model = &req.model;
  ctx.object = &req.object;
  ctx.hand_heatmap = &hand;
  ctx.hand_frame = req.demo.palm_frame;
  ctx.hp = req.hp;
  ctx.contact_region = contact_region(req.object, hand, req.hp.heatmap_contact_threshold);
  return ctx;
}

/// (a) Open gripper at the demonstrated palm frame.
inline GripperConfig stage_a_init(const RetargetRequest& req) {
  return initial_config_from_hand(req.model, req.demo);
}

struct StageOutcome {
  GripperConfig config;
  std::vector<TraceEntry> trace;
  std::vector<std::string> warnings;
};

/// (b) Close the fingers onto the demonstrated contact region: theta only, minimizing
/// fingertip attraction plus interpenetration and self-penetration.
inline StageOutcome stage_b_finger_init(const RetargetRequest& req, const ObjectiveContext& ctx,
                                        const GripperConfig& config_a) {
  StageOutcome out{config_a, {}, {}};
  if (ctx.contact_region.empty()) {
    out.warnings.emplace_back("empty contact region: stage b skipped");
    return out;
  }
  TermMask mask = TermMask::none();
  mask.push = mask.pull = mask.normal = true;
  mask.self_pen = true;
  mask.fingertip = true;
  const LossAndGradFn fn = [&](const GripperConfig& c) { return loss_gradient(ctx, c, mask); };
  OptimizationResult r = run_optimization(fn, config_a, req.stage_b_schedule, req.model.lower_limits(),
                                          req.model.upper_limits(), GroupMask{false, false, true});
  out.config = r.config;
  out.trace = std::move(r.trace);
  if (r.clamped) out.warnings.emplace_back("stage b: joint values clamped to limits");
  return out;
}

/// Whether the given links of the posed gripper interpenetrate the object.
inline bool links_penetrate(const GripperModel& model, const PosedGripper& posed, const TriMesh& object,
                            std::span<const std::size_t> links) {
  for (std::size_t l : links) {
    for (std::uint32_t s = posed.link_offsets[l]; s < posed.link_offsets[l + 1]; ++s) {
      if (object.contains(posed.points[s])) return true;
    }
    const Aabb& box = model.links()[l].mesh.bounds();
    for (const Vec3& p : object.sample_points()) {
      const Vec3 local = posed.link_world[l].inverse_apply(p);
      if (box.contains(local) && model.links()[l].mesh.contains(local)) return true;
    }
  }
  return false;
}

/// Candidate values for one DOF, from open towards closed.
inline std::vector<double> closing_bins(const GripperModel& model, std::size_t dof, int bins) {
  const double open = model.open_theta()[static_cast<Eigen::Index>(dof)];
  if (bins <= 1) return {open};
  const double closed = model.closed_value(dof);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(bins));
  for (int b = 0; b < bins; ++b) out.push_back(open + (closed - open) * b / (bins - 1));
  return out;
}

/// DOFs ordered proximal to distal (by the first link each one moves).
inline std::vector<std::size_t> closing_order(const GripperModel& model) {
  std::vector<std::pair<std::size_t, std::size_t>> keyed;
  for (std::size_t k = 0; k < model.dof_count(); ++k) {
    const auto links = model.links_moved_by(k);
    keyed.emplace_back(links.empty() ? model.link_count() : links.front(), k);
  }
  std::stable_sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (const auto& [_, k] : keyed) out.push_back(k);
  return out;
}

/// (b, ablation) Discrete closing: each DOF sweeps its bins from open to closed and
/// stops at the last bin before its moving links would penetrate the object.
inline GripperConfig stage_b_discrete(const GripperModel& model, const TriMesh& object,
                                      const GripperConfig& config_a, int bins) {
  GripperConfig c = config_a;
  for (std::size_t dof : closing_order(model)) {
    const std::vector<std::size_t> moving = model.links_moved_by(dof);
    double chosen = c.theta[static_cast<Eigen::Index>(dof)];
    bool first = true;
    for (double value : closing_bins(model, dof, bins)) {
      GripperConfig trial = c;
      trial.theta[static_cast<Eigen::Index>(dof)] = value;
      const PosedGripper posed = forward_kinematics(model, trial);
      if (links_penetrate(model, posed, object, moving)) break;
      chosen = value;
      first = false;
    }
    if (first) chosen = model.open_theta()[static_cast<Eigen::Index>(dof)];
    c.theta[static_cast<Eigen::Index>(dof)] = chosen;
  }
  return c;
}

/// (c) Refine every DOF on the masked full objective. With every term disabled the
/// stage is skipped and the configuration is returned unchanged.
inline StageOutcome stage_c_refine(const RetargetRequest& req, const ObjectiveContext& ctx,
                                   const GripperConfig& config_b) {
  StageOutcome out{config_b, {}, {}};
  const TermMask mask = req.loss_mask.mask();
  if (!mask.any()) return out;
  const LossAndGradFn fn = [&](const GripperConfig& c) { return loss_gradient(ctx, c, mask); };
  OptimizationResult r = run_optimization(fn, config_b, req.stage_c_schedule, req.model.lower_limits(),
                                          req.model.upper_limits());
  out.config = r.config;
  out.trace = std::move(r.trace);
  if (r.clamped) out.warnings.emplace_back("stage c: joint values clamped to limits");
  return out;
}

inline RetargetResult retarget(const RetargetRequest& req) {
  req.validate();
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  RetargetResult res;

  res.stage_a = stage_a_init(req);
  res.loss_a = total_loss(ctx, res.stage_a);

  if (req.finger_init == FingerInit::Discrete) {
    res.stage_b = stage_b_discrete(req.model, req.object, res.stage_a, req.discrete_bins);
  } else {
    StageOutcome b = stage_b_finger_init(req, ctx, res.stage_a);
    res.stage_b = b.config;
    res.stage_b_trace = std::move(b.trace);
    res.warnings.insert(res.warnings.end(), b.warnings.begin(), b.warnings.end());
  }
  res.loss_b = total_loss(ctx, res.stage_b);

  StageOutcome c = stage_c_refine(req, ctx, res.stage_b);
  res.final_config = c.config;
  res.stage_c_trace = std::move(c.trace);
  res.warnings.insert(res.warnings.end(), c.warnings.begin(), c.warnings.end());
  res.loss_final = total_loss(ctx, res.final_config);

  MetricsSettings ms = req.metrics;
  ms.seed = req.seed;
  res.metrics = evaluate_grasp(req.object, req.demo, req.model, res.final_config, req.hp, req.wrench_model, ms);
  return res;
}

}  // namespace graspmimic
