// Acceptance checks: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion...]   (no arguments: all criteria)

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "graspmimic/graspmimic.hpp"
#include "oracles.hpp"

using namespace graspmimic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

const GripperModel& gripper() {
  static const GripperModel g = synthetic::two_finger_gripper();
  return g;
}

const synthetic::Fixture& fixture(const std::string& name) {
  static std::map<std::string, synthetic::Fixture> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, synthetic::make_fixture(name)).first;
  return it->second;
}

RetargetRequest request(const std::string& name) { return synthetic::make_request(fixture(name), gripper()); }

Outcome constants() {
  const Json hp = detail::fields_to_json(Hyperparams{});
  const Json expected_hp = {{"lambda_contact", 10.0}, {"lambda_orientation", 10.0}, {"lambda_interpen", 0.5},
                            {"lambda_self", 1.0},     {"tau", 0.01},               {"delta", 0.002},
                            {"alpha1", 2.4},          {"beta1", 7.0},              {"gamma1", 0.001},
                            {"alpha2", 0.04},         {"beta2", 0.06}};
  bool ok = true;
  std::string mismatches;
  for (const auto& [key, value] : expected_hp.items()) {
    if (hp.at(key) != value) {
      ok = false;
      mismatches += " " + key;
    }
  }
  const OptSchedule s;
  const bool schedule_ok = s.lr_translation == 0.001 && s.lr_rotation == 0.01 && s.lr_theta == 0.01 &&
                           s.iterations == 100 && s.decay_at == 50 && s.decay_factor == 10.0;
  if (!schedule_ok) mismatches += " schedule";
  const Json dump = {{"hyperparams", hp}, {"schedule", detail::schedule_to_json(s)}};
  return {ok && schedule_ok, (ok && schedule_ok ? "defaults " : "mismatch:" + mismatches + " defaults ") + dump.dump()};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const RetargetRequest req = request("sphere_pinch");
  const ContactHeatmap hand = hand_heatmap(req);
  const ObjectiveContext ctx = make_context(req, hand);
  GradCheckOptions options;
  options.configurations = 20;
  const auto results = check_gradients(ctx, stage_a_init(req), term_names(), options);
  bool ok = true;
  std::string detail;
  for (const GradCheckTermResult& r : results) {
    ok = ok && r.max_relative_error < 1e-4 && r.configurations >= 20;
    detail += fmt("%s %.1e (%zu/%zu active) ", r.term.c_str(), r.max_relative_error, r.active, r.configurations);
  }
  const double t = seconds_since(t0);
  ok = ok && t < 120.0;
  return {ok, detail + fmt("h=%.0e, %.1f s (limit 1e-4, 120 s)", options.step, t)};
}

Outcome stage_a_invariant() {
  double worst = 0.0;
  for (const std::string& name : synthetic::fixture_names()) {
    const RetargetRequest req = request(name);
    worst = std::max(worst, loss_orientation(forward_kinematics(req.model, stage_a_init(req)).palm, req.demo.palm_frame));
  }
  return {worst < 1e-9, fmt("max L_O after stage a = %.2e over %zu fixtures (limit 1e-9)", worst,
                            synthetic::fixture_names().size())};
}

Outcome efficacy() {
  bool ok = true;
  std::string detail;
  for (const std::string& name : synthetic::fixture_names()) {
    const RetargetRequest req = request(name);
    const auto t0 = Clock::now();
    const RetargetResult r = retarget(req);
    const double t = seconds_since(t0);
    const double first = r.stage_c_trace.front().loss.total, last = r.stage_c_trace.back().loss.total;
    const bool pass = r.stage_c_trace.size() == 101 && last <= first && r.metrics.max_penetration_depth_cm < 0.5 &&
                      r.metrics.orientation_difference < 0.05 && t < 60.0;
    ok = ok && pass;
    detail += fmt("%s: loss %.3f->%.3f depth %.3f mm odiff %.4f %.1f s%s; ", name.c_str(), first, last,
                  10.0 * r.metrics.max_penetration_depth_cm, r.metrics.orientation_difference, t, pass ? "" : " FAIL");
  }
  return {ok, detail + "(limits: non-increasing, < 5 mm, < 0.05, < 60 s)"};
}

Outcome ablations() {
  struct Means {
    double heatmap = 0.0;
    double orientation = 0.0;
  };
  const auto run = [](const std::function<void(RetargetRequest&)>& variant) {
    Means m;
    const auto& names = synthetic::fixture_names();
    for (const std::string& name : names) {
      RetargetRequest req = request(name);
      variant(req);
      const MetricsReport r = retarget(req).metrics;
      m.heatmap += r.contact_heatmap_difference / static_cast<double>(names.size());
      m.orientation += r.orientation_difference / static_cast<double>(names.size());
    }
    return m;
  };
  const Means full = run([](RetargetRequest&) {});
  const Means discrete = run([](RetargetRequest& r) { r.finger_init = FingerInit::Discrete; });
  const Means no_contact = run([](RetargetRequest& r) { r.loss_mask.contact = false; });
  const Means no_orientation = run([](RetargetRequest& r) { r.loss_mask.orientation = false; });
  const bool i = discrete.heatmap >= full.heatmap;
  const bool ii = no_contact.heatmap > full.heatmap;
  const bool iii = no_orientation.orientation > full.orientation;
  return {i && ii && iii,
          fmt("(i) heatmap discrete %.5f >= contact-opt %.5f %s; (ii) heatmap without L_C %.5f > full %.5f %s; "
              "(iii) orientation without L_O %.5f > full %.5f %s",
              discrete.heatmap, full.heatmap, i ? "holds" : "VIOLATED", no_contact.heatmap, full.heatmap,
              ii ? "holds" : "VIOLATED", no_orientation.orientation, full.orientation, iii ? "holds" : "VIOLATED")};
}

Outcome epsilon_estimator() {
  const WrenchModel wm;
  const std::vector<Contact> pads = test::antipodal_pads();
  const std::vector<Wrench> w = contact_wrenches(pads, wm, Vec3::Zero());
  const auto t0 = Clock::now();
  const EpsilonResult e = epsilon_quality(pads, wm, Vec3::Zero(), 5000, 0);
  const double t = seconds_since(t0);
  const double dense = dense_support_minimum(w, sample_directions(1000000, 1));
  const double exact = test::exact_epsilon(w);
  const double dense_err = std::abs(e.epsilon - dense) / dense;
  const double exact_err = std::abs(e.epsilon - exact) / exact;

  const std::vector<Contact> single{pads.front()};
  const std::vector<Contact> same_side{pads[0], pads[1]};
  const EpsilonResult s = epsilon_quality(single, wm, Vec3::Zero(), 5000, 0);
  const EpsilonResult ss = epsilon_quality(same_side, wm, Vec3::Zero(), 5000, 0);
  const bool degenerate_ok = s == EpsilonResult{} && ss == EpsilonResult{};
  const bool ok = e.force_closure && dense_err <= 0.05 && degenerate_ok && t < 10.0;
  return {ok, fmt("eps %.5f vs dense 1e6-direction oracle %.5f: rel err %.3f (limit 0.05)%s; vs exact facet "
                  "oracle %.5f: rel err %.1e; single contact (%.1f,%s), same side (%.1f,%s); %.2f s",
                  e.epsilon, dense, dense_err, dense_err <= 0.05 ? "" : " VIOLATED", exact, exact_err, s.epsilon,
                  s.force_closure ? "true" : "false", ss.epsilon, ss.force_closure ? "true" : "false", t)};
}

Outcome geometry_oracles() {
  RawMesh a = make_box(Vec3::Zero(), Vec3::Ones()), b = make_box(Vec3::Zero(), Vec3::Ones());
  b.translate({0.5, 0.0, 0.0});
  const TriMesh ma = TriMesh::from_triangles(a.vertices, a.faces, 2000);
  const TriMesh mb = TriMesh::from_triangles(b.vertices, b.faces, 2000);
  const VolumeEstimate v = penetration_volume_estimate(ma, mb, 100000, 1);
  const bool volume_ok = std::abs(v.volume - 0.5) <= 3.0 * v.standard_error;

  const RawMesh s = make_icosphere(1.0, 4);
  const TriMesh ms = TriMesh::from_triangles(s.vertices, s.faces, 2000);
  Rng rng(2);
  int cube_agree = 0, sphere_agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5));
    cube_agree += ma.contains(p) == (p.minCoeff() > 0.0 && p.maxCoeff() < 1.0);
    const Vec3 q(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5));
    sphere_agree += ms.contains(q) == (q.norm() < 1.0);
  }
  const bool ok = volume_ok && cube_agree >= 999 && sphere_agree >= 999;
  // The bounding-box intersection is exactly the overlap here, so sigma can be 0.
  return {ok, fmt("volume %.6f +- %.6f (|v-0.5| <= 3 sigma %s); winding agreement cube %d/1000, sphere %d/1000 "
                  "(limit 999)",
                  v.volume, v.standard_error, volume_ok ? "holds" : "VIOLATED", cube_agree, sphere_agree)};
}

Outcome determinism() {
  bool ok = true;
  std::string detail;
  for (const std::string& name : {"sphere_pinch", "box_wrap"}) {
    const RetargetRequest req = request(name);
    const ProblemDoc problem = problem_from_json(fixture_problem_json(fixture(name)));
    std::string docs[2];
    for (std::string& doc : docs) {
      Json j = result_to_json(make_result_doc(retarget(req), problem, req.model.name()));
      j.erase("timestamp");
      doc = dump_document(j);
    }
    const bool same = docs[0] == docs[1];
    ok = ok && same;
    detail += fmt("%s: %zu bytes %s; ", name.c_str(), docs[0].size(), same ? "identical" : "DIFFER");
  }
  return {ok, detail + "(timestamp excluded)"};
}

Outcome heatmap_formula() {
  const double tau = Hyperparams{}.tau;
  const std::vector<Vec3> hand{Vec3::Zero()};
  const std::vector<Vec3> object{Vec3(tau, 0.0, 0.0)};
  const double h = contact_heatmap(object, KdTree(hand), tau).values[0];
  const double err = std::abs(h - std::exp(-1.0));
  return {err <= 1e-12, fmt("H(tau) = %.17g, |H - e^-1| = %.1e (limit 1e-12)", h, err)};
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

const std::vector<Criterion> kCriteria{
    {"constants conformance", constants},  {"gradient suite", gradient_suite},
    {"stage-a invariant", stage_a_invariant}, {"pipeline efficacy", efficacy},
    {"ablation ordering", ablations},      {"epsilon-quality estimator", epsilon_estimator},
    {"geometry oracles", geometry_oracles}, {"determinism", determinism},
    {"heatmap formula", heatmap_formula},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(kCriteria.size())) {
      std::cerr << "unknown criterion '" << argv[i] << "' (1-" << kCriteria.size() << ")\n";
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(k - 1));
  }
  if (selected.empty()) {
    for (std::size_t k = 0; k < kCriteria.size(); ++k) selected.push_back(k);
  }
  bool all = true;
  for (std::size_t k : selected) {
    Outcome o;
    try {
      o = kCriteria[k].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << k + 1 << " (" << kCriteria[k].name
              << "): " << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
