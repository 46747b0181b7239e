#pragma once

/// @file
/// @brief Structural invariant checks over seeded P-HO runs, used by the `selftest` command.

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "../algorithms.hpp"
#include "../problems/cartpole.hpp"
#include "../problems/synthetic.hpp"

namespace pho::bench {

struct CheckResult
{
  std::string name;
  bool passed{true};
  std::string detail;
};

struct SelftestReport
{
  std::vector<CheckResult> checks;

  bool passed() const
  {
    for (const auto & c : checks) {
      if (!c.passed) { return false; }
    }
    return true;
  }
};

/// Query logs equal in everything except timing.
inline bool same_trace(const RunResult & a, const RunResult & b)
{
  if (a.status != b.status || a.solver_queries != b.solver_queries || a.query_log.size() != b.query_log.size()
      || a.goal_solutions.size() != b.goal_solutions.size() || a.best_objective != b.best_objective) {
    return false;
  }
  for (std::size_t i = 0; i < a.query_log.size(); ++i) {
    const auto & p = a.query_log[i];
    const auto & q = b.query_log[i];
    const bool objective_same = p.objective == q.objective || (std::isnan(p.objective) && std::isnan(q.objective));
    const bool violation_same = p.violation == q.violation || (std::isnan(p.violation) && std::isnan(q.violation));
    if (p.iter != q.iter || p.phase != q.phase || !(p.lambda == q.lambda) || p.status != q.status
        || p.accepted != q.accepted || !objective_same || !violation_same || p.queries != q.queries) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.goal_solutions.size(); ++i) {
    if (!(a.goal_solutions[i].x_star.array() == b.goal_solutions[i].x_star.array()).all()) { return false; }
  }
  if (a.tree.has_value() != b.tree.has_value()) { return false; }
  return !a.tree || *a.tree == *b.tree;
}

namespace detail {

class CheckSet
{
public:
  void fail(const std::string & name, const std::string & why)
  {
    auto & c = get(name);
    if (c.passed) {
      c.passed = false;
      c.detail = why;
    }
  }

  void touch(const std::string & name) { get(name); }

  SelftestReport report() const { return {checks_}; }

private:
  CheckResult & get(const std::string & name)
  {
    for (auto & c : checks_) {
      if (c.name == name) { return c; }
    }
    checks_.push_back({name, true, ""});
    return checks_.back();
  }

  std::vector<CheckResult> checks_;
};

/// Invariants of one P-HO run; `oracle_goal` holds the goal minima when known.
inline void check_run(
  CheckSet & cs, const std::string & label, const ParamNLP & nlp, const ParamMap & map, const RunResult & r,
  const SolverSettings & solver, const std::vector<double> * oracle_goal)
{
  const Vec goal_theta = map_params(map, HomotopyPoint::ones(map.homotopy_dim));
  for (const auto & g : r.goal_solutions) {
    if (!is_feasible(nlp, g.x_star, goal_theta, solver.feasibility())) {
      cs.fail("goal solutions feasible", label + ": infeasible goal solution");
    }
    if (oracle_goal != nullptr) {
      bool match = false;
      for (double m : *oracle_goal) { match = match || std::abs(g.x_star[0] - m) <= 1e-3; }
      if (!match) { cs.fail("goal solutions match oracle", label + ": goal solution not among oracle minima"); }
    }
  }
  if (r.best_objective) {
    double lo = kInf;
    for (const auto & g : r.goal_solutions) { lo = std::min(lo, g.objective); }
    if (lo != *r.best_objective) { cs.fail("best objective is goal minimum", label); }
  }
  std::optional<double> prev;
  for (const auto & q : r.query_log) {
    if (prev && (!q.best_so_far || *q.best_so_far > *prev)) {
      cs.fail("best-so-far non-increasing", label + ": best-so-far rose at iteration " + std::to_string(q.iter));
    }
    if (q.best_so_far) { prev = q.best_so_far; }
  }
  if (r.tree) {
    std::size_t solve_rows = 0;
    for (const auto & q : r.query_log) { solve_rows += (q.phase == Phase::Solve && q.iter > 0) ? 1 : 0; }
    if (solve_rows != r.tree->attempts().size()) {
      cs.fail("no duplicate attempts", label + ": solve count differs from the attempt set size");
    }
    if (r.tree->attempts().size() > r.tree->nodes().size() * r.tree->params().size()) {
      cs.fail("no duplicate attempts", label + ": more attempts than pairs");
    }
    std::stringstream ss;
    r.tree->serialize(ss);
    const auto back = OptimizationTree::deserialize(ss);
    if (!(back == *r.tree)) { cs.fail("tree serialization round-trip", label); }
  }
}

}  // namespace detail

/**
 * @brief Runs the structural suite.
 *
 * Seeded P-HO runs on every synthetic family (and a short cart-pole run when enabled) are
 * checked for: ratio within [0,1] at every iteration, no repeated attempts, feasible goal
 * solutions that match the oracle, non-increasing best-so-far, serialization round-trip and
 * bitwise reproducibility under the same seed.
 */
inline SelftestReport run_selftest(std::ostream * log = nullptr, bool include_cartpole = true)
{
  detail::CheckSet cs;
  for (const char * name : {"solve/sample ratio within [0,1]", "no duplicate attempts", "goal solutions feasible",
                            "goal solutions match oracle", "best-so-far non-increasing", "best objective is goal minimum",
                            "tree serialization round-trip", "seeded runs reproducible"}) {
    cs.touch(name);
  }
  const SolverSettings solver;

  auto one = [&](const std::string & label, const ParamNLP & nlp, const ParamMap & map, const Vec & x0,
                 const Budget & budget, std::uint64_t seed, const std::vector<double> * oracle) {
    PhoHooks hooks;
    hooks.after_iteration = [&](std::size_t iter, const OptimizationTree & t) {
      const double r = t.solve_sample_ratio();
      if (!(r >= 0.0 && r <= 1.0)) {
        cs.fail("solve/sample ratio within [0,1]", label + ": ratio " + std::to_string(r) + " at iteration "
                                                     + std::to_string(iter));
      }
    };
    try {
      const auto a = run_pho(nlp, map, x0, PhoHyperparams{}, budget, seed, solver,
                             OptimizationTree::kDefaultSimilarityTol, UniquenessScope::SameLambda, hooks);
      const auto b = run_pho(nlp, map, x0, PhoHyperparams{}, budget, seed, solver);
      detail::check_run(cs, label, nlp, map, a, solver, oracle);
      if (!same_trace(a, b)) { cs.fail("seeded runs reproducible", label); }
      if (log != nullptr) {
        *log << label << ": " << to_string(a.status) << ", " << a.goal_solutions.size() << " goal solutions, "
             << a.solver_queries << " queries\n";
      }
    } catch (const std::exception & e) {
      cs.fail("no duplicate attempts", label + ": " + e.what());
    }
  };

  for (auto kind : {synthetic::Kind::Bifurcation, synthetic::Kind::DoubleWell, synthetic::Kind::AsymmetricDoubleWell,
                    synthetic::Kind::Fold, synthetic::Kind::Disconnected, synthetic::Kind::AbbreviatedPath}) {
    const auto p = synthetic::make_synthetic(kind);
    std::vector<double> goal;
    for (const auto & m : p.goal_minima()) { goal.push_back(m.x); }
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      one(std::string(synthetic::to_string(kind)) + " seed " + std::to_string(seed), p.nlp, p.map, p.x0,
          Budget::queries(150), seed, &goal);
    }
  }
  if (include_cartpole) {
    const auto nlp = cartpole::build_nlp();
    cartpole::Params goal = cartpole::easy_params();
    goal.m_pole = 5.0;
    goal.F_max = 150.0;
    const auto map = ParamMap::per_component(cartpole::easy_params().to_vector(), goal.to_vector());
    one("cartpole seed 7", nlp, map, Vec::Zero(static_cast<Eigen::Index>(nlp.n_vars)), Budget::queries(6), 7, nullptr);
  }
  auto rep = cs.report();
  if (log != nullptr) {
    for (const auto & c : rep.checks) {
      *log << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
    }
  }
  return rep;
}

}  // namespace pho::bench
