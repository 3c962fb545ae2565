// graspmimic: retarget human grasp demonstrations onto a robotic gripper.

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "graspmimic/graspmimic.hpp"

namespace fs = std::filesystem;
using namespace graspmimic;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

/// Runs a command body and maps library errors onto the exit-code contract.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

struct Loaded {
  ProblemDoc problem;
  RetargetRequest request;
};

Loaded load(const fs::path& problem_path, const fs::path& gripper_path) {
  Loaded l;
  l.problem = load_problem(problem_path);
  l.request = make_request(l.problem, problem_path.parent_path(), load_gripper_for(gripper_path, l.problem));
  return l;
}

int run_retarget(const fs::path& problem_path, const fs::path& gripper_path, const fs::path& out,
                 const std::string& trace) {
  const Loaded l = load(problem_path, gripper_path);
  const RetargetResult r = retarget(l.request);
  write_document(out, result_to_json(make_result_doc(r, l.problem, l.request.model.name())));
  if (!trace.empty()) {
    std::ofstream csv(trace);
    if (!csv) throw ValidationError("cannot write " + trace);
    write_trace_csv(csv, r.stage_b_trace, r.stage_c_trace);
  }
  for (const std::string& w : r.warnings) std::cerr << "warning: " << w << '\n';
  return kExitOk;
}

int run_evaluate(const fs::path& problem_path, const fs::path& gripper_path, const fs::path& config_path,
                 const fs::path& out) {
  const Loaded l = load(problem_path, gripper_path);
  const GripperConfig config = load_config(config_path);
  const RetargetRequest& req = l.request;
  const MetricsReport m =
      evaluate_grasp(req.object, req.demo, req.model, config, req.hp, req.wrench_model, req.metrics);
  write_document(out, metrics_document(m));
  return kExitOk;
}

int run_heatmap(const fs::path& problem_path, const std::string& gripper_path, const std::string& config_path,
                const fs::path& out) {
  if (gripper_path.empty() != config_path.empty()) {
    throw ValidationError("--gripper and --config must be given together");
  }
  const ProblemDoc p = load_problem(problem_path);
  const TriMesh object = load_problem_object(p, problem_path.parent_path());
  ContactHeatmap h;
  if (config_path.empty()) {
    const HandDemo demo = load_problem_demo(p, problem_path.parent_path());
    h = contact_heatmap(object.vertices(), demo.hand_mesh.index(), p.hp.tau);
  } else {
    const GripperModel model = load_gripper_for(gripper_path, p);
    const PosedGripper posed = forward_kinematics(model, load_config(config_path));
    h = contact_heatmap(object.vertices(), posed.index, p.hp.tau);
  }
  std::vector<Rgb> colors;
  colors.reserve(h.size());
  for (double v : h.values) colors.push_back(heat_color(v));
  write_colored_ply(out, object.vertices(), object.faces(), colors);
  return kExitOk;
}

int run_fk(const fs::path& gripper_path, const fs::path& config_path, const fs::path& out) {
  const GripperModel model = load_gripper(gripper_path, 4);
  const PosedGripper posed = forward_kinematics(model, load_config(config_path));
  if (posed.clamped) std::cerr << "warning: joint values clamped to limits\n";
  std::vector<TriMesh> parts;
  std::vector<ObjGroup> groups;
  for (std::size_t l = 0; l < model.link_count(); ++l) {
    parts.push_back(model.links()[l].mesh.transformed(posed.link_world[l]));
  }
  for (std::size_t l = 0; l < model.link_count(); ++l) {
    groups.push_back({model.links()[l].name, parts[l].vertices(), parts[l].faces()});
  }
  std::ofstream file(out);
  if (!file) throw ValidationError("cannot write " + out.string());
  write_obj(file, groups);
  return kExitOk;
}

int run_check_grads(const fs::path& problem_path, const fs::path& gripper_path, const std::string& term,
                    std::optional<std::uint64_t> seed, std::size_t configurations, bool corrupt) {
  const Loaded l = load(problem_path, gripper_path);
  const ContactHeatmap hand = hand_heatmap(l.request);
  const ObjectiveContext ctx = make_context(l.request, hand);
  std::vector<std::string> terms;
  if (term.empty()) {
    terms = term_names();
  } else {
    TermMask::only(term);  // rejects unknown names
    terms.push_back(term);
  }
  GradCheckOptions options;
  options.configurations = configurations;
  options.seed = seed.value_or(l.problem.seed);
  options.corrupt = corrupt;
  const std::vector<GradCheckTermResult> results =
      check_gradients(ctx, stage_a_init(l.request), terms, options);
  constexpr double kTolerance = 1e-3;
  bool ok = true;
  for (const GradCheckTermResult& r : results) {
    const bool pass = r.max_relative_error < kTolerance;
    ok = ok && pass;
    std::cout << std::left << std::setw(12) << r.term << " max_rel_err " << std::scientific << std::setprecision(3)
              << r.max_relative_error << "  configs " << r.configurations << "  active " << r.active << "  "
              << (pass ? "ok" : "FAIL") << '\n';
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int run_fixtures(const fs::path& dir) {
  for (const fs::path& p : write_fixture_set(dir)) std::cout << p.string() << '\n';
  return kExitOk;
}

/// Evaluation metrics table, one row per problem plus their mean.
void write_summary(const fs::path& path, const std::vector<fs::path>& problems, const std::vector<fs::path>& results,
                   const std::vector<int>& codes) {
  std::ofstream csv(path);
  if (!csv) throw ValidationError("cannot write " + path.string());
  csv.precision(17);
  csv << "problem,status,epsilon_quality,max_penetration_depth_cm,penetration_volume_cm3,orientation_difference,"
         "contact_heatmap_difference\n";
  std::array<double, 5> sum{};
  std::size_t ok = 0;
  for (std::size_t i = 0; i < problems.size(); ++i) {
    const std::string name = problems[i].parent_path().filename().string();
    if (codes[i] != kExitOk) {
      csv << name << ",exit " << codes[i] << ",,,,,\n";
      continue;
    }
    const MetricsReport m = result_from_json(detail::read_json_file(results[i])).metrics;
    const std::array<double, 5> row{m.epsilon_quality, m.max_penetration_depth_cm, m.penetration_volume_cm3,
                                    m.orientation_difference, m.contact_heatmap_difference};
    csv << name << ",ok";
    for (std::size_t k = 0; k < row.size(); ++k) {
      csv << ',' << row[k];
      sum[k] += row[k];
    }
    csv << '\n';
    ++ok;
  }
  if (ok == 0) return;
  csv << "mean," << ok << " ok";
  for (double v : sum) csv << ',' << v / static_cast<double>(ok);
  csv << '\n';
}

/// Retargets every `<dir>/<name>/problem.json` into `<out_dir>/<name>.json` and
/// tabulates the metrics in `<out_dir>/summary.csv`.
int run_batch(const fs::path& dir, const fs::path& gripper_path, const fs::path& out_dir, unsigned jobs) {
  std::vector<fs::path> problems;
  for (const fs::directory_entry& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "problem.json")) problems.push_back(e.path() / "problem.json");
  }
  std::sort(problems.begin(), problems.end());
  if (problems.empty()) throw ValidationError("no */problem.json under " + dir.string());
  fs::create_directories(out_dir);
  std::vector<int> codes(problems.size(), kExitOk);
  std::vector<fs::path> results;
  for (const fs::path& p : problems) results.push_back(out_dir / (p.parent_path().filename().string() + ".json"));
  std::atomic<std::size_t> next{0};
  std::mutex log;
  const auto worker = [&] {
    for (std::size_t i = next++; i < problems.size(); i = next++) {
      codes[i] = guarded([&] { return run_retarget(problems[i], gripper_path, results[i], ""); });
      const std::lock_guard<std::mutex> lock(log);
      std::cout << problems[i].string() << " -> " << (codes[i] == kExitOk ? results[i].string() : "failed") << '\n';
    }
  };
  std::vector<std::thread> pool;
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(problems.size())));
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  write_summary(out_dir / "summary.csv", problems, results, codes);
  return *std::max_element(codes.begin(), codes.end());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retarget human grasp demonstrations onto robotic grippers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string problem, gripper, out, trace, config, term, dir, out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t configurations = 20;
  bool corrupt = false;
  unsigned jobs = 1;
  int code = kExitOk;

  CLI::App* retarget_cmd = app.add_subcommand("retarget", "Run the three-stage retargeting pipeline");
  retarget_cmd->add_option("--problem", problem, "Grasp problem document")->required()->check(CLI::ExistingFile);
  retarget_cmd->add_option("--gripper", gripper, "Gripper model document")->required();
  retarget_cmd->add_option("--out", out, "Result document to write")->required();
  retarget_cmd->add_option("--trace", trace, "Per-iteration loss trace (CSV)");
  retarget_cmd->callback([&] { code = guarded([&] { return run_retarget(problem, gripper, out, trace); }); });

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Compute grasp metrics for a given pose");
  evaluate_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--gripper", gripper)->required();
  evaluate_cmd->add_option("--config", config, "Result or configuration document")->required();
  evaluate_cmd->add_option("--out", out, "Metrics document to write")->required();
  evaluate_cmd->callback([&] { code = guarded([&] { return run_evaluate(problem, gripper, config, out); }); });

  CLI::App* heatmap_cmd = app.add_subcommand("heatmap", "Write the object's contact heatmap as a coloured PLY");
  heatmap_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  heatmap_cmd->add_option("--gripper", gripper, "With --config: robot heatmap instead of the hand's");
  heatmap_cmd->add_option("--config", config);
  heatmap_cmd->add_option("--out", out, "PLY file to write")->required();
  heatmap_cmd->callback([&] { code = guarded([&] { return run_heatmap(problem, gripper, config, out); }); });

  CLI::App* fk_cmd = app.add_subcommand("fk", "Export the posed gripper as OBJ, one object per link");
  fk_cmd->add_option("--gripper", gripper)->required();
  fk_cmd->add_option("--config", config)->required();
  fk_cmd->add_option("--out", out, "OBJ file to write")->required();
  fk_cmd->callback([&] { code = guarded([&] { return run_fk(gripper, config, out); }); });

  CLI::App* grads_cmd = app.add_subcommand("check-grads", "Compare analytic and finite-difference loss gradients");
  grads_cmd->add_option("--problem", problem)->required()->check(CLI::ExistingFile);
  grads_cmd->add_option("--gripper", gripper)->required();
  grads_cmd->add_option("--term", term, "Single loss term to check");
  grads_cmd->add_option("--seed", seed, "Configuration sampling seed (default: the problem's seed)");
  grads_cmd->add_option("--configurations", configurations, "Random configurations per term");
  grads_cmd->add_flag("--corrupt", corrupt)->group("");
  grads_cmd->callback([&] {
    code = guarded([&] { return run_check_grads(problem, gripper, term, seed, configurations, corrupt); });
  });

  CLI::App* fixtures_cmd = app.add_subcommand("fixtures", "Write the synthetic gripper and fixture problems");
  fixtures_cmd->add_option("dir", dir, "Output directory")->required();
  fixtures_cmd->callback([&] { code = guarded([&] { return run_fixtures(dir); }); });

  CLI::App* batch_cmd = app.add_subcommand("batch", "Retarget every <dir>/*/problem.json");
  batch_cmd->add_option("--dir", dir)->required()->check(CLI::ExistingDirectory);
  batch_cmd->add_option("--gripper", gripper)->required();
  batch_cmd->add_option("--out-dir", out_dir)->required();
  batch_cmd->add_option("--jobs", jobs, "Concurrent retargets")->check(CLI::PositiveNumber);
  batch_cmd->callback([&] { code = guarded([&] { return run_batch(dir, gripper, out_dir, jobs); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? kExitOk : kExitValidation;
  }
  return code;
}
