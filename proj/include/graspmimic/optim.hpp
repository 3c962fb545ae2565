#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "graspmimic/kinematics.hpp"
#include "graspmimic/losses.hpp"
#include "graspmimic/types.hpp"

namespace graspmimic {

struct AdamWParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  bool operator==(const AdamWParams&) const = default;
};

/// Learning rates per parameter group and the step-decay rule.
struct OptSchedule {
  double lr_translation = 0.001;
  double lr_rotation = 0.01;
  double lr_theta = 0.01;
  int iterations = 100;
  int decay_at = 50;
  double decay_factor = 10.0;
  AdamWParams adamw;

  void validate() const {
    if (iterations <= 0) throw ValidationError("iterations must be positive");
    if (decay_at <= 0 || decay_at > iterations) throw ValidationError("decay_at must lie in (0, iterations]");
    if (lr_translation < 0.0 || lr_rotation < 0.0 || lr_theta < 0.0) {
      throw ValidationError("learning rates must be non-negative");
    }
    if (!(decay_factor > 0.0)) throw ValidationError("decay factor must be positive");
  }

  /// Multiplier applied to every group's rate at `iteration`.
  double decay_multiplier(int iteration) const { return iteration >= decay_at ? 1.0 / decay_factor : 1.0; }

  bool operator==(const OptSchedule&) const = default;
};

struct OptimizerState {
  VecX m;
  VecX v;
  int step = 0;
  VecX lr;  // per parameter; 0 freezes a parameter entirely
  AdamWParams adamw;

  OptimizerState() = default;
  OptimizerState(VecX learning_rates, AdamWParams params)
      : m(VecX::Zero(learning_rates.size())), v(VecX::Zero(learning_rates.size())),
        lr(std::move(learning_rates)), adamw(params) {}
};

/// Per-parameter learning rates laid out as (translation | rotation_6d | theta).
inline VecX group_learning_rates(double lr_t, double lr_r, double lr_theta, std::size_t dof) {
  VecX lr(GripperConfig::kPoseDims + static_cast<Eigen::Index>(dof));
  lr.head<3>().setConstant(lr_t);
  lr.segment<6>(3).setConstant(lr_r);
  lr.tail(static_cast<Eigen::Index>(dof)).setConstant(lr_theta);
  return lr;
}

/// One AdamW update with decoupled weight decay; `lr_scale` multiplies every rate.
inline void adamw_step(OptimizerState& state, VecX& params, const VecX& grad, double lr_scale = 1.0) {
  if (params.size() != grad.size() || params.size() != state.m.size()) {
    throw ValidationError("optimizer dimension mismatch");
  }
  if (!grad.allFinite()) throw NumericalError("non-finite gradient passed to the optimizer");
  const AdamWParams& a = state.adamw;
  state.step += 1;
  state.m = a.beta1 * state.m + (1.0 - a.beta1) * grad;
  state.v = a.beta2 * state.v + (1.0 - a.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(a.beta1, state.step);
  const double bc2 = 1.0 - std::pow(a.beta2, state.step);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double lr = state.lr[i] * lr_scale;
    if (lr == 0.0) continue;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + a.eps) + a.weight_decay * params[i]);
  }
}

struct TraceEntry {
  int iteration = 0;
  LossBreakdown loss;
  double lr_translation = 0.0;
  double lr_rotation = 0.0;
  double lr_theta = 0.0;

  bool operator==(const TraceEntry&) const = default;
};

struct OptimizationResult {
  GripperConfig config;
  std::vector<TraceEntry> trace;  // iterations + 1 entries; the last is the final config
  bool clamped = false;
};

using LossAndGradFn = std::function<LossAndGradient(const GripperConfig&)>;

/// Which parameter groups move; frozen groups keep their values bit-for-bit.
struct GroupMask {
  bool translation = true;
  bool rotation = true;
  bool theta = true;
};

/// Runs exactly `schedule.iterations` AdamW steps, clamping theta to
/// [lower, upper] after each one.
inline OptimizationResult run_optimization(const LossAndGradFn& loss_and_grad, const GripperConfig& init,
                                           const OptSchedule& schedule, const VecX& lower, const VecX& upper,
                                           GroupMask groups = {}, bool record_trace = true) {
  schedule.validate();
  const auto dof = static_cast<std::size_t>(init.theta.size());
  OptimizerState state(group_learning_rates(groups.translation ? schedule.lr_translation : 0.0,
                                            groups.rotation ? schedule.lr_rotation : 0.0,
                                            groups.theta ? schedule.lr_theta : 0.0, dof),
                       schedule.adamw);
  OptimizationResult out;
  VecX params = init.to_vector();
  const auto n = static_cast<Eigen::Index>(dof);
  const auto record = [&](int it, const LossBreakdown& loss) {
    if (!record_trace) return;
    const double s = schedule.decay_multiplier(it);
    out.trace.push_back({it, loss, state.lr[0] * s, state.lr[3] * s, n ? state.lr[9] * s : 0.0});
  };
  for (int it = 0; it < schedule.iterations; ++it) {
    const LossAndGradient lg = loss_and_grad(GripperConfig::from_vector(params));
    if (!std::isfinite(lg.loss.objective)) throw NumericalError("non-finite loss at iteration " + std::to_string(it));
    record(it, lg.loss);
    adamw_step(state, params, lg.gradient, schedule.decay_multiplier(it));
    const VecX theta = params.tail(n);
    const VecX clamped = theta.cwiseMax(lower).cwiseMin(upper);
    if (clamped != theta) out.clamped = true;
    params.tail(n) = clamped;
  }
  out.config = GripperConfig::from_vector(params);
  if (record_trace) record(schedule.iterations, loss_and_grad(out.config).loss);
  return out;
}

}  // namespace graspmimic
