#include <gtest/gtest.h>

#include "test_support.hpp"

namespace graspmimic {
namespace {

VecX scalar(double x) { return VecX::Constant(1, x); }

TEST(AdamW, OneStepByHand) {
  AdamWParams a;
  a.weight_decay = 0.0;
  OptimizerState state(scalar(0.001), a);
  VecX p = scalar(1.0);
  adamw_step(state, p, scalar(1.0));
  EXPECT_NEAR(p[0], 1.0 - 0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[0], 0.999, 1e-9);
}

TEST(AdamW, WeightDecayIsDecoupled) {
  OptimizerState state(scalar(0.001), AdamWParams{});
  VecX p = scalar(1.0);
  adamw_step(state, p, scalar(1.0));
  EXPECT_NEAR(p[0], 1.0 - 0.001 * (1.0 / (1.0 + 1e-8) + 0.01), 1e-15);
}

TEST(AdamW, ZeroGradientWithoutDecayLeavesParams) {
  AdamWParams a;
  a.weight_decay = 0.0;
  OptimizerState state(VecX::Constant(3, 0.1), a);
  VecX p(3);
  p << 1.0, -2.0, 3.0;
  const VecX before = p;
  for (int i = 0; i < 10; ++i) adamw_step(state, p, VecX::Zero(3));
  EXPECT_EQ(p, before);
}

TEST(AdamW, QuadraticConverges) {
  AdamWParams a;
  a.weight_decay = 0.0;
  OptimizerState state(scalar(0.01), a);
  VecX p = scalar(2.0);  // Adam moves at most about lr per step
  for (int i = 0; i < 500; ++i) adamw_step(state, p, scalar(2.0 * (p[0] - 3.0)));
  EXPECT_LT(std::abs(p[0] - 3.0), 1e-2);
}

TEST(AdamW, ZeroRateFreezesBitForBit) {
  OptimizerState state((VecX(2) << 0.0, 0.1).finished(), AdamWParams{});
  VecX p(2);
  p << 0.123456789, 0.5;
  for (int i = 0; i < 20; ++i) adamw_step(state, p, VecX::Constant(2, 0.7));
  EXPECT_EQ(p[0], 0.123456789);
  EXPECT_NE(p[1], 0.5);
}

TEST(AdamW, RejectsBadInput) {
  OptimizerState state(VecX::Constant(2, 0.1), AdamWParams{});
  VecX p = VecX::Zero(2);
  EXPECT_THROW(adamw_step(state, p, scalar(1.0)), ValidationError);
  EXPECT_THROW(adamw_step(state, p, VecX::Constant(2, std::nan(""))), NumericalError);
}

TEST(GroupLearningRates, Layout) {
  const VecX lr = group_learning_rates(1.0, 2.0, 3.0, 4);
  ASSERT_EQ(lr.size(), 13);
  EXPECT_EQ(lr.head<3>(), Vec3::Constant(1.0));
  EXPECT_TRUE((lr.segment<6>(3).array() == 2.0).all());
  EXPECT_TRUE((lr.tail(4).array() == 3.0).all());
}

/// Config with one joint whose loss is (theta - target)^2; pose terms are ignored.
GripperConfig toy_config(double theta) {
  GripperConfig c;
  c.translation.setZero();
  c.rotation_6d << 1, 0, 0, 0, 1, 0;
  c.theta = scalar(theta);
  return c;
}

LossAndGradFn toy_quadratic(double target) {
  return [target](const GripperConfig& c) {
    LossAndGradient lg;
    const double d = c.theta[0] - target;
    lg.loss.total = lg.loss.objective = d * d;
    lg.gradient = VecX::Zero(static_cast<Eigen::Index>(c.dims()));
    lg.gradient[GripperConfig::kPoseDims] = 2.0 * d;
    return lg;
  };
}

TEST(RunOptimization, ClampsToJointLimits) {
  OptSchedule s;
  s.lr_theta = 0.1;
  const OptimizationResult r = run_optimization(toy_quadratic(2.0), toy_config(0.0), s, scalar(-1.0), scalar(1.0));
  EXPECT_EQ(r.config.theta[0], 1.0);
  EXPECT_TRUE(r.clamped);
  ASSERT_EQ(r.trace.size(), 101u);
}

TEST(RunOptimization, DecayTakesEffectAtConfiguredIteration) {
  const OptSchedule s;
  const OptimizationResult r = run_optimization(toy_quadratic(0.5), toy_config(0.0), s, scalar(-1.0), scalar(1.0));
  EXPECT_NEAR(r.trace[49].lr_theta, 10.0 * r.trace[51].lr_theta, 1e-15);
  EXPECT_NEAR(r.trace[49].lr_translation, 10.0 * r.trace[51].lr_translation, 1e-15);
  EXPECT_EQ(r.trace[49].lr_theta, s.lr_theta);
  EXPECT_EQ(r.trace[50].lr_theta, s.lr_theta / 10.0);
}

TEST(RunOptimization, FeasibleAfterEveryIteration) {
  OptSchedule s;
  s.lr_theta = 0.2;
  const OptimizationResult r = run_optimization(toy_quadratic(-3.0), toy_config(0.9), s, scalar(-0.5), scalar(1.0));
  for (const TraceEntry& e : r.trace) {
    // loss = (theta + 3)^2, so the recorded loss bounds theta
    const double theta = std::sqrt(e.loss.total) - 3.0;
    ASSERT_GE(theta, -0.5 - 1e-12);
    ASSERT_LE(theta, 1.0 + 1e-12);
  }
}

TEST(RunOptimization, ConvexLossEventuallyNonIncreasing) {
  OptSchedule s;
  s.iterations = 200;
  s.decay_at = 100;
  const OptimizationResult r = run_optimization(toy_quadratic(0.3), toy_config(-0.8), s, scalar(-1.0), scalar(1.0));
  for (std::size_t i = r.trace.size() - 20; i < r.trace.size(); ++i) {
    EXPECT_LE(r.trace[i].loss.total, r.trace[i - 1].loss.total + 1e-15);
  }
}

TEST(RunOptimization, FrozenGroupsKeepValues) {
  const OptSchedule s;
  const auto fn = [](const GripperConfig& c) {
    LossAndGradient lg;
    lg.loss.total = lg.loss.objective = c.to_vector().squaredNorm();
    lg.gradient = 2.0 * c.to_vector();
    return lg;
  };
  GripperConfig init = toy_config(0.4);
  init.translation << 0.1, 0.2, 0.3;
  const OptimizationResult r =
      run_optimization(fn, init, s, scalar(-1.0), scalar(1.0), GroupMask{false, false, true});
  EXPECT_EQ(r.config.translation, init.translation);
  EXPECT_EQ(r.config.rotation_6d, init.rotation_6d);
  EXPECT_NE(r.config.theta[0], 0.4);
}

TEST(RunOptimization, DeterministicAndNonFiniteLossThrows) {
  const OptSchedule s;
  const auto a = run_optimization(toy_quadratic(0.2), toy_config(0.0), s, scalar(-1.0), scalar(1.0));
  const auto b = run_optimization(toy_quadratic(0.2), toy_config(0.0), s, scalar(-1.0), scalar(1.0));
  EXPECT_EQ(a.config.theta, b.config.theta);
  EXPECT_EQ(a.trace, b.trace);
  const auto bad = [](const GripperConfig& c) {
    LossAndGradient lg;
    lg.loss.objective = std::numeric_limits<double>::infinity();
    lg.gradient = VecX::Zero(static_cast<Eigen::Index>(c.dims()));
    return lg;
  };
  EXPECT_THROW(run_optimization(bad, toy_config(0.0), s, scalar(-1.0), scalar(1.0)), NumericalError);
}

TEST(OptSchedule, Validation) {
  OptSchedule s;
  EXPECT_NO_THROW(s.validate());
  s.decay_at = 0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = OptSchedule{};
  s.decay_at = 101;
  EXPECT_THROW(s.validate(), ValidationError);
  s = OptSchedule{};
  s.lr_rotation = -1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_EQ(OptSchedule{}.decay_multiplier(49), 1.0);
  EXPECT_EQ(OptSchedule{}.decay_multiplier(50), 0.1);
}

}  // namespace
}  // namespace graspmimic
