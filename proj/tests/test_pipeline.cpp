#include <gtest/gtest.h>

#include "test_support.hpp"

namespace graspmimic {
namespace {

RetargetRequest request(const std::string& name) {
  return synthetic::make_request(test::fixture(name), test::gripper());
}

/// Exact-winding penetration test for the given links, independent of the tree.
bool penetrates_exact(const GripperModel& g, const PosedGripper& posed, const TriMesh& object,
                      const std::vector<std::size_t>& links) {
  for (std::size_t l : links) {
    for (std::uint32_t s = posed.link_offsets[l]; s < posed.link_offsets[l + 1]; ++s) {
      if (object.winding().evaluate_exact(posed.points[s]) > 0.5) return true;
    }
    for (const Vec3& p : object.sample_points()) {
      if (g.links()[l].mesh.winding().evaluate_exact(posed.link_world[l].inverse_apply(p)) > 0.5) return true;
    }
  }
  return false;
}

double distance_to(const std::vector<Vec3>& region, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Vec3& r : region) best = std::min(best, (p - r).norm());
  return best;
}

TEST(StageA, AlignsPalmFrameOnEveryFixture) {
  for (const std::string& name : synthetic::fixture_names()) {
    const RetargetRequest req = request(name);
    const GripperConfig c = stage_a_init(req);
    EXPECT_EQ(c.theta, req.model.open_theta());
    EXPECT_LT(loss_orientation(forward_kinematics(req.model, c).palm, req.demo.palm_frame), 1e-9) << name;
  }
}

TEST(StageB, FingertipsReachContactRegionOnSphere) {
  const RetargetRequest req = request("sphere_pinch");
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  ASSERT_FALSE(ctx.contact_region.empty());
  const GripperConfig a = stage_a_init(req);
  const StageOutcome b = stage_b_finger_init(req, ctx, a);
  EXPECT_TRUE(b.warnings.empty());
  for (const Vec3& tip : forward_kinematics(req.model, b.config).fingertips) {
    EXPECT_LT(distance_to(ctx.contact_region, tip), 2.0 * req.hp.tau);
  }
  EXPECT_EQ(b.config.translation, a.translation);
  EXPECT_EQ(b.config.rotation_6d, a.rotation_6d);
  EXPECT_NE(b.config.theta, a.theta);
  EXPECT_EQ(b.trace.size(), 101u);
}

TEST(StageB, PoseIsBitwiseFrozenOnEveryFixture) {
  for (const std::string& name : synthetic::fixture_names()) {
    const RetargetRequest req = request(name);
    const ContactHeatmap hand = hand_heatmap(req);
    const ObjectiveContext ctx = make_context(req, hand);
    const GripperConfig a = stage_a_init(req);
    const StageOutcome b = stage_b_finger_init(req, ctx, a);
    EXPECT_EQ(b.config.translation, a.translation) << name;
    EXPECT_EQ(b.config.rotation_6d, a.rotation_6d) << name;
  }
}

TEST(StageB, EmptyContactRegionWarnsAndSkips) {
  RetargetRequest req = request("sphere_pinch");
  req.demo.hand_mesh = req.demo.hand_mesh.transformed({Mat3::Identity(), Vec3(1.0, 0.0, 0.0)});
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  ASSERT_TRUE(ctx.contact_region.empty());
  const GripperConfig a = stage_a_init(req);
  const StageOutcome b = stage_b_finger_init(req, ctx, a);
  EXPECT_EQ(b.config.theta, a.theta);
  ASSERT_EQ(b.warnings.size(), 1u);
  EXPECT_NE(b.warnings[0].find("empty contact region"), std::string::npos);
  const RetargetResult r = retarget(req);
  EXPECT_EQ(r.stage_b.theta, r.stage_a.theta);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(StageBDiscrete, FarObjectClosesEveryJoint) {
  const RetargetRequest req = request("sphere_pinch");
  const TriMesh far = req.object.transformed({Mat3::Identity(), Vec3(5.0, 0.0, 0.0)});
  const GripperConfig c = stage_b_discrete(req.model, far, stage_a_init(req), 20);
  for (std::size_t k = 0; k < req.model.dof_count(); ++k) {
    EXPECT_DOUBLE_EQ(c.theta[static_cast<Eigen::Index>(k)], req.model.closed_value(k));
  }
}

TEST(StageBDiscrete, SingleBinKeepsOpenPose) {
  const RetargetRequest req = request("sphere_pinch");
  const GripperConfig a = stage_a_init(req);
  EXPECT_EQ(stage_b_discrete(req.model, req.object, a, 1).theta, req.model.open_theta());
  EXPECT_EQ(closing_bins(req.model, 0, 1).size(), 1u);
  const std::vector<double> bins = closing_bins(req.model, 0, 20);
  EXPECT_EQ(bins.front(), req.model.open_theta()[0]);
  EXPECT_DOUBLE_EQ(bins.back(), req.model.closed_value(0));
}

TEST(StageBDiscrete, MatchesExhaustivePerBinOracle) {
  for (const std::string& name : {"sphere_pinch", "box_wrap"}) {
    const RetargetRequest req = request(name);
    const GripperModel& g = req.model;
    const GripperConfig chosen = stage_b_discrete(g, req.object, stage_a_init(req), 20);
    GripperConfig c = stage_a_init(req);
    bool stopped_mid_arc = false;
    for (std::size_t dof : closing_order(g)) {
      const auto k = static_cast<Eigen::Index>(dof);
      const std::vector<double> bins = closing_bins(g, dof, 20);
      std::vector<bool> pen;
      for (double v : bins) {
        GripperConfig trial = c;
        trial.theta[k] = v;
        pen.push_back(penetrates_exact(g, forward_kinematics(g, trial), req.object, g.links_moved_by(dof)));
      }
      const auto first = static_cast<std::size_t>(std::find(pen.begin(), pen.end(), true) - pen.begin());
      const double expected = first == 0 ? g.open_theta()[k] : bins[first - 1];
      EXPECT_EQ(chosen.theta[k], expected) << name << " dof " << dof;
      if (first > 0 && first < bins.size()) stopped_mid_arc = true;
      c.theta[k] = expected;
    }
    EXPECT_TRUE(stopped_mid_arc) << name;
  }
}

TEST(StageC, AllOffMaskLeavesConfigUnchanged) {
  RetargetRequest req = request("sphere_pinch");
  req.loss_mask = LossToggles::none();
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  GripperConfig b = stage_a_init(req);
  b.theta.setConstant(0.5);
  const StageOutcome c = stage_c_refine(req, ctx, b);
  EXPECT_EQ(c.config.translation, b.translation);
  EXPECT_EQ(c.config.rotation_6d, b.rotation_6d);
  EXPECT_EQ(c.config.theta, b.theta);
  EXPECT_TRUE(c.trace.empty());
}

TEST(StageC, TotalLossDoesNotIncreaseOnSphere) {
  const RetargetRequest req = request("sphere_pinch");
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  const StageOutcome b = stage_b_finger_init(req, ctx, stage_a_init(req));
  const StageOutcome c = stage_c_refine(req, ctx, b.config);
  ASSERT_EQ(c.trace.size(), 101u);
  EXPECT_LE(c.trace.back().loss.total, c.trace.front().loss.total);
  EXPECT_EQ(c.trace.front().loss, total_loss(ctx, b.config));
}

TEST(Retarget, DeterministicAndMetricsMatchFinalConfig) {
  const RetargetRequest req = request("cylinder_side");
  const RetargetResult a = retarget(req);
  const RetargetResult b = retarget(req);
  EXPECT_EQ(a.final_config.translation, b.final_config.translation);
  EXPECT_EQ(a.final_config.rotation_6d, b.final_config.rotation_6d);
  EXPECT_EQ(a.final_config.theta, b.final_config.theta);
  EXPECT_EQ(a.stage_c_trace, b.stage_c_trace);
  EXPECT_EQ(a.metrics, b.metrics);

  MetricsSettings ms = req.metrics;
  ms.seed = req.seed;
  EXPECT_EQ(a.metrics,
            evaluate_grasp(req.object, req.demo, req.model, a.final_config, req.hp, req.wrench_model, ms));
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  EXPECT_EQ(a.loss_final, total_loss(ctx, a.final_config));
  EXPECT_EQ(a.loss_b, total_loss(ctx, a.stage_b));
  EXPECT_LT(a.metrics.orientation_difference, 0.05);
}

TEST(Retarget, DiscreteStrategyUsesDiscreteStageB) {
  RetargetRequest req = request("box_wrap");
  req.finger_init = FingerInit::Discrete;
  const RetargetResult r = retarget(req);
  EXPECT_TRUE(r.stage_b_trace.empty());
  EXPECT_EQ(r.stage_b.theta, stage_b_discrete(req.model, req.object, r.stage_a, req.discrete_bins).theta);
  EXPECT_EQ(r.stage_c_trace.size(), 101u);
}

TEST(Retarget, RejectsInvalidRequests) {
  RetargetRequest req = request("sphere_pinch");
  req.discrete_bins = 0;
  EXPECT_THROW(retarget(req), ValidationError);
  req = request("sphere_pinch");
  req.hp.tau = -1.0;
  EXPECT_THROW(retarget(req), ValidationError);
  EXPECT_THROW(finger_init_from_string("greedy"), ValidationError);
  EXPECT_EQ(finger_init_from_string(to_string(FingerInit::Discrete)), FingerInit::Discrete);
}

}  // namespace
}  // namespace graspmimic
