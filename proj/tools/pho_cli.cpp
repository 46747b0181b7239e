// Command-line front end: solve, sweep, budget-curve, inspect-tree, selftest.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <pho/bench/config.hpp>
#include <pho/bench/export.hpp>
#include <pho/bench/selftest.hpp>
#include <pho/bench/sweep.hpp>

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kIoError = 2, kSelftestFailed = 3 };

struct CommonOptions
{
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose{false};
};

pho::bench::ExperimentConfig load(const CommonOptions & o)
{
  if (o.config.empty()) { throw pho::ConfigError("--config is required"); }
  auto c = pho::bench::load_config(o.config);
  if (o.seed) { c.base_seed = *o.seed; }
  if (!o.out.empty()) { c.output_dir = o.out; }
  return c;
}

void print_result(const pho::RunResult & r)
{
  std::cout << "status: " << pho::to_string(r.status) << '\n'
            << "solver queries: " << r.solver_queries << '\n'
            << "wall time: " << r.wall_time << " s\n"
            << "goal solutions: " << r.goal_solutions.size() << '\n';
  if (r.best_objective) { std::cout << "best objective: " << *r.best_objective << '\n'; }
  if (r.tree) { std::cout << "tree: " << r.tree->nodes().size() << " nodes, " << r.tree->params().size() << " points\n"; }
}

int cmd_solve(const CommonOptions & o, const std::string & algorithm)
{
  auto c = load(o);
  const auto inst = pho::bench::make_problem(c.problem);
  const pho::Vec easy = c.theta_easy ? *c.theta_easy : inst.default_easy;
  if (!c.theta_goal) { throw pho::ConfigError("solve needs theta_goal in the config"); }
  const pho::bench::AlgorithmConfig * chosen = &c.algorithms.front();
  if (!algorithm.empty()) {
    chosen = nullptr;
    for (const auto & a : c.algorithms) {
      if (pho::bench::to_string(a.kind) == algorithm) { chosen = &a; }
    }
    if (chosen == nullptr) { throw pho::ConfigError("algorithm '" + algorithm + "' is not in the config"); }
  }
  if (o.verbose) { c.solver.trace = &std::cerr; }
  const auto r = pho::bench::run_algorithm(c, inst, *chosen, easy, *c.theta_goal, pho::bench::run_seed(c, 0));
  std::cout << "algorithm: " << pho::bench::to_string(chosen->kind) << '\n';
  print_result(r);
  if (!o.out.empty()) {
    const std::filesystem::path dir(o.out);
    pho::bench::detail::prepare_output_dir(dir);
    auto log = pho::bench::detail::open_output(dir / "query_log.csv");
    pho::write_query_log_csv(log, r);
    if (r.tree) {
      auto os = pho::bench::detail::open_output(dir / "tree.txt");
      r.tree->serialize(os);
      if (inst.transcription && r.solved()) {
        const auto steps = pho::bench::export_trajectory_evolution(*r.tree, dir / "evolution", *inst.transcription);
        std::cout << "swings along path:";
        for (const auto & s : steps) { std::cout << ' ' << s.swings; }
        std::cout << '\n';
      }
    }
    if (inst.transcription && r.solved()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < r.goal_solutions.size(); ++i) {
        if (r.goal_solutions[i].objective < r.goal_solutions[best].objective) { best = i; }
      }
      auto os = pho::bench::detail::open_output(dir / "goal_trajectory.csv");
      pho::cartpole::write_trajectory_csv(os, r.goal_solutions[best].x_star, *inst.transcription);
    }
  }
  return kOk;
}

int cmd_sweep(const CommonOptions & o)
{
  const auto c = load(o);
  const auto rep = pho::bench::run_sweep(c, o.verbose ? &std::cerr : nullptr);
  pho::bench::write_sweep_report(rep, c.output_dir);
  for (const auto & a : rep.algorithms) {
    std::cout << a << ": " << rep.solved_count(a) << " / " << rep.runs(a) << " solved\n";
  }
  std::cout << "results in " << c.output_dir << '\n';
  return kOk;
}

int cmd_budget_curve(const CommonOptions & o)
{
  const auto c = load(o);
  const auto pts = pho::bench::run_budget_curve(c, o.verbose ? &std::cerr : nullptr);
  pho::bench::write_budget_curve(pts, c.output_dir);
  for (const auto & p : pts) {
    std::cout << p.algorithm << " @ " << p.checkpoint << ' ' << p.unit << ": success " << p.success_rate;
    if (p.mean_best_objective) { std::cout << ", mean best " << *p.mean_best_objective; }
    std::cout << '\n';
  }
  return kOk;
}

int cmd_inspect(const std::string & path)
{
  std::ifstream is(path);
  if (!is) { throw pho::bench::IoError("cannot open " + path); }
  const auto t = pho::OptimizationTree::deserialize(is);
  std::cout << "points: " << t.params().size() << ", nodes: " << t.nodes().size()
            << ", attempts: " << t.attempts().size() << ", ratio: " << t.solve_sample_ratio() << '\n';
  for (std::size_t i = 0; i < t.params().size(); ++i) {
    std::cout << "  lambda[" << i << "] =";
    for (std::size_t k = 0; k < t.params()[i].dim(); ++k) { std::cout << ' ' << t.params()[i][k]; }
    std::cout << '\n';
  }
  for (const auto & n : t.nodes()) {
    std::cout << "  node " << n.id << " parent " << (n.parent ? std::to_string(*n.parent) : std::string("-"))
              << " lambda " << n.lambda_id << " objective " << n.objective
              << (t.param(n.lambda_id).is_goal() ? "  [goal]" : "") << '\n';
  }
  return kOk;
}

int cmd_selftest(const CommonOptions & o)
{
  const auto rep = pho::bench::run_selftest(o.verbose ? &std::cout : nullptr);
  for (const auto & c : rep.checks) {
    if (!o.verbose) { std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n'; }
  }
  std::cout << (rep.passed() ? "selftest passed" : "selftest FAILED") << '\n';
  return rep.passed() ? kOk : kSelftestFailed;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Homotopy optimization benchmarks"};
  app.require_subcommand(1);
  CommonOptions opts;
  auto add_common = [&](CLI::App * sub) {
    sub->add_option("--config", opts.config, "YAML experiment configuration");
    sub->add_option("--seed", opts.seed, "override base_seed");
    sub->add_option("--out", opts.out, "output directory");
    sub->add_flag("--verbose", opts.verbose, "progress and solver trace on stderr");
  };
  std::string algorithm;
  auto * solve = app.add_subcommand("solve", "run one algorithm on the configured goal");
  add_common(solve);
  solve->add_option("--algorithm", algorithm, "algorithm from the config (default: first)");
  auto * sweep = app.add_subcommand("sweep", "success-map sweep over sampled goal parameters");
  add_common(sweep);
  auto * curve = app.add_subcommand("budget-curve", "success rate and best objective at budget checkpoints");
  add_common(curve);
  std::string tree_path;
  auto * inspect = app.add_subcommand("inspect-tree", "pretty-print a serialized tree");
  inspect->add_option("path", tree_path, "tree file")->required();
  auto * selftest = app.add_subcommand("selftest", "structural invariant suite");
  add_common(selftest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp & e) {
    return app.exit(e);
  } catch (const CLI::ParseError & e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*solve) { return cmd_solve(opts, algorithm); }
    if (*sweep) { return cmd_sweep(opts); }
    if (*curve) { return cmd_budget_curve(opts); }
    if (*inspect) { return cmd_inspect(tree_path); }
    if (*selftest) { return cmd_selftest(opts); }
  } catch (const pho::ConfigError & e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const pho::ParseError & e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kIoError;
  } catch (const pho::bench::IoError & e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const pho::TreeError & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kOk;
}
