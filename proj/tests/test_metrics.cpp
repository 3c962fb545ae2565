#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"

namespace graspmimic {
namespace {

using test::antipodal_pads;

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

TEST(ExtractContacts, FarGripperGivesNone) {
  const TriMesh object = test::sphere(0.03, 3, 2000);
  const std::vector<Vec3> far{{1.0, 0.0, 0.0}};
  EXPECT_TRUE(extract_contacts(KdTree(far), object, 0.002).empty());
}

TEST(ExtractContacts, AntipodalPadsGiveTwoOpposedClusters) {
  const TriMesh object = test::sphere(0.03, 4, 20000);
  const std::vector<Vec3> pads{{0.0305, 0.0, 0.0}, {-0.0305, 0.0, 0.0}};
  const KdTree index(pads);
  const auto contacts = extract_contacts(index, object, 0.002);
  ASSERT_EQ(contacts.size(), 2u);
  EXPECT_LT(angle_deg(contacts[0].normal, -contacts[1].normal), 5.0);
  EXPECT_LT(angle_deg(contacts[0].normal, contacts[0].point), 5.0);
  std::size_t raw = 0;
  for (const Vec3& p : object.sample_points()) raw += index.nearest(p).distance() < 0.002;
  EXPECT_LE(contacts.size(), raw);
  EXPECT_GT(raw, 2u);
}

TEST(Epsilon, DegenerateContactSetsGiveZero) {
  const WrenchModel wm;
  EXPECT_EQ(epsilon_quality({}, wm, Vec3::Zero(), 5000, 0), EpsilonResult{});
  const std::vector<Contact> single{{Vec3::UnitX(), Vec3::UnitX()}};
  EXPECT_EQ(epsilon_quality(single, wm, Vec3::Zero(), 5000, 0), EpsilonResult{});
  // every contact pushes towards -x: the origin lies outside the hull
  std::vector<Contact> same_side;
  for (const Contact& c : antipodal_pads()) {
    if (c.point.x() > 0.0) same_side.push_back(c);
  }
  EXPECT_EQ(epsilon_quality(same_side, wm, Vec3::Zero(), 5000, 0), EpsilonResult{});
  EXPECT_THROW(epsilon_quality(antipodal_pads(), wm, Vec3::Zero(), 999, 0), ValidationError);
}

TEST(Epsilon, TwoPointContactsLackTorqueAboutTheirAxis) {
  const std::vector<Contact> two{{Vec3::UnitX(), Vec3::UnitX()}, {-Vec3::UnitX(), -Vec3::UnitX()}};
  const auto w = contact_wrenches(two, WrenchModel{}, Vec3::Zero());
  EXPECT_TRUE(wrench_rank_deficient(w));
  EXPECT_EQ(epsilon_quality(two, WrenchModel{}, Vec3::Zero(), 5000, 0).epsilon, 0.0);
}

TEST(Epsilon, AntipodalPadsMatchExactOracle) {
  WrenchModel wm;
  wm.cone_edges = 4;  // keeps the facet enumeration small
  const auto w = contact_wrenches(antipodal_pads(), wm, Vec3::Zero());
  const EpsilonResult e = epsilon_from_wrenches(w, 5000, 1);
  ASSERT_TRUE(e.force_closure);
  const double exact = test::exact_epsilon(w);
  EXPECT_GT(exact, 0.0);
  EXPECT_LT(std::abs(e.epsilon - exact) / exact, 0.05);
  // Both sampled quantities bound the exact radius from above.
  EXPECT_GE(e.epsilon, exact * (1.0 - 1e-9));
  EXPECT_GE(dense_support_minimum(w, sample_directions(100000, 12345)), e.epsilon);
}

TEST(Epsilon, ScalesWithContactForces) {
  const auto w = contact_wrenches(antipodal_pads(), WrenchModel{}, Vec3::Zero());
  std::vector<Wrench> doubled;
  for (const Wrench& x : w) doubled.push_back(2.0 * x);
  const double a = epsilon_from_wrenches(w, 5000, 3).epsilon;
  const double b = epsilon_from_wrenches(doubled, 5000, 3).epsilon;
  EXPECT_NEAR(b / a, 2.0, 2e-6);
}

TEST(Epsilon, AddingContactsNeverDecreasesQuality) {
  const WrenchModel wm{1.0, 8, 1.0, 0.002};  // fixed torque scale so wrenches are comparable
  std::vector<Contact> contacts = antipodal_pads();
  const auto dirs = sample_directions(100000, 7);
  double previous = epsilon_quality(contacts, wm, Vec3::Zero(), 5000, 0).epsilon;
  double previous_dense = dense_support_minimum(contact_wrenches(contacts, wm, Vec3::Zero()), dirs);
  for (const Vec3& p : {Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0.6, 0.8, 0)}) {
    contacts.push_back({p, p});
    const double e = epsilon_quality(contacts, wm, Vec3::Zero(), 5000, 0).epsilon;
    const double dense = dense_support_minimum(contact_wrenches(contacts, wm, Vec3::Zero()), dirs);
    EXPECT_GE(e, previous * 0.99);
    EXPECT_GE(dense, previous_dense * 0.99);
    previous = e;
    previous_dense = dense;
  }
}

TEST(Epsilon, DeterministicForSeed) {
  const auto w = contact_wrenches(antipodal_pads(), WrenchModel{}, Vec3::Zero());
  EXPECT_EQ(epsilon_from_wrenches(w, 5000, 9), epsilon_from_wrenches(w, 5000, 9));
  EXPECT_EQ(sample_directions(10, 4), sample_directions(10, 4));
  for (const Wrench& d : sample_directions(100, 4)) EXPECT_NEAR(d.norm(), 1.0, 1e-12);
}

TEST(EvaluateGrasp, IdentityDemoGivesZeroSimilarityMetrics) {
  const GripperModel& g = test::gripper();
  GripperConfig c = open_config(g);
  c.theta.setConstant(0.3);
  const PosedGripper posed = forward_kinematics(g, c);
  HandDemo demo;
  demo.hand_mesh = posed_mesh(g, posed);
  demo.palm_frame = posed.palm;
  const TriMesh object = test::sphere(0.02, 3, 1000).transformed({Mat3::Identity(), Vec3(0, 0, 0.04)});
  MetricsSettings ms;
  ms.volume_samples = 10000;
  const MetricsReport m = evaluate_grasp(object, demo, g, c, Hyperparams{}, WrenchModel{}, ms);
  EXPECT_EQ(m.orientation_difference, 0.0);
  EXPECT_EQ(m.contact_heatmap_difference, 0.0);
}

TEST(EvaluateGrasp, ClearanceGivesZeroPenetration) {
  const auto req = synthetic::make_request(test::fixture("sphere_pinch"), test::gripper());
  const GripperConfig c = stage_a_init(req);
  const PosedGripper posed = forward_kinematics(req.model, c);
  double clearance = std::numeric_limits<double>::infinity();
  for (const Vec3& p : req.object.sample_points()) clearance = std::min(clearance, posed.index.nearest(p).distance());
  ASSERT_GE(clearance, 0.001);
  const MetricsReport m = evaluate_grasp(req.object, req.demo, req.model, c, req.hp, req.wrench_model, req.metrics);
  EXPECT_EQ(m.max_penetration_depth_cm, 0.0);
  EXPECT_EQ(m.penetration_volume_cm3, 0.0);
  EXPECT_EQ(m.contact_count, 0u);
  EXPECT_FALSE(m.force_closure);
}

TEST(EvaluateGrasp, PinchOnSphereIsForceClosure) {
  const auto req = synthetic::make_request(test::fixture("sphere_pinch"), test::gripper());
  const RetargetResult r = retarget(req);
  EXPECT_TRUE(r.metrics.force_closure);
  EXPECT_GT(r.metrics.epsilon_quality, 0.0);
  EXPECT_GE(r.metrics.contact_count, 2u);
  const PosedGripper posed = forward_kinematics(req.model, r.final_config);
  const double depth = max_penetration_depth(posed_mesh(req.model, posed), req.object);
  EXPECT_EQ(r.metrics.max_penetration_depth_cm, 100.0 * depth);
}

TEST(WrenchModel, Validation) {
  WrenchModel wm;
  EXPECT_NO_THROW(wm.validate());
  wm.cone_edges = 2;
  EXPECT_THROW(wm.validate(), ValidationError);
  wm = WrenchModel{};
  wm.friction_mu = 0.0;
  EXPECT_THROW(wm.validate(), ValidationError);
}

}  // namespace
}  // namespace graspmimic
