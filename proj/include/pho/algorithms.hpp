#pragma once

/**
 * @file
 * @brief Homotopy drivers: P-HO, RHO, LIHO and the one-depth baseline.
 *
 * Every driver first solves the easy problem (lambda = 0) from x0 and counts that as a solver
 * query. A query is "successful" when the solver converges and the point passes is_feasible.
 */

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlp.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "tree.hpp"

namespace pho {

struct PhoHyperparams
{
  std::size_t q{10000};
  double rho_A{1.0};
  double P_g{0.3};
  /// Return at the first goal solution instead of spending the remaining budget.
  bool stop_at_first_goal{false};

  void validate() const
  {
    if (q < 1) { throw ConfigError("P-HO: q must be at least 1"); }
    if (!(rho_A >= 0.0 && rho_A <= 1.0)) { throw ConfigError("P-HO: rho_A must lie in [0,1]"); }
    if (!(P_g >= 0.0 && P_g <= 1.0)) { throw ConfigError("P-HO: P_g must lie in [0,1]"); }
  }
};

struct RhoHyperparams
{
  std::size_t q{10000};
  double P_g{0.3};

  void validate() const
  {
    if (q < 1) { throw ConfigError("RHO: q must be at least 1"); }
    if (!(P_g >= 0.0 && P_g <= 1.0)) { throw ConfigError("RHO: P_g must lie in [0,1]"); }
  }
};

struct LihoHyperparams
{
  std::size_t k1{2};
  double c1{1.5};
  std::size_t k2{1};
  double c2{0.3};
  double epsilon{1e-9};
  double delta_lambda_0{1e-2};
  /// After a failed step, retry from the last successful lambda (false: keep advancing).
  bool rollback{true};

  void validate() const
  {
    if (k1 < 1 || k2 < 1) { throw ConfigError("LIHO: streak lengths must be at least 1"); }
    if (!(c1 > 1.0)) { throw ConfigError("LIHO: c1 must exceed 1"); }
    if (!(c2 > 0.0 && c2 < 1.0)) { throw ConfigError("LIHO: c2 must lie in (0,1)"); }
    if (!(epsilon > 0.0)) { throw ConfigError("LIHO: epsilon must be positive"); }
    if (!(delta_lambda_0 > 0.0 && delta_lambda_0 <= 1.0)) { throw ConfigError("LIHO: delta_lambda_0 must lie in (0,1]"); }
  }
};

struct Budget
{
  std::size_t max_solver_queries{std::numeric_limits<std::size_t>::max()};
  double max_wall_time{kInf};

  static Budget queries(std::size_t n) { return Budget{n, kInf}; }

  void validate() const
  {
    if (max_solver_queries == std::numeric_limits<std::size_t>::max() && !std::isfinite(max_wall_time)) {
      throw ConfigError("budget: at least one limit must be finite");
    }
    if (!(max_wall_time > 0.0)) { throw ConfigError("budget: wall-time limit must be positive"); }
  }
};

enum class RunStatus { Solved, BudgetExhausted, Failed };

inline std::string_view to_string(RunStatus s)
{
  switch (s) {
    case RunStatus::Solved: return "Solved";
    case RunStatus::BudgetExhausted: return "BudgetExhausted";
    case RunStatus::Failed: return "Failed";
  }
  return "Unknown";
}

enum class Phase { Solve, Sample };

struct QueryRecord
{
  std::size_t iter{0};
  Phase phase{Phase::Solve};
  HomotopyPoint lambda;
  /// Empty for sample-phase rows.
  std::optional<SolveStatus> status;
  bool accepted{false};
  double objective{kInf};
  double violation{kInf};
  std::size_t queries{0};
  double seconds{0.0};
  /// Lowest goal objective found so far, if any.
  std::optional<double> best_so_far;
};

struct RunResult
{
  RunStatus status{RunStatus::Failed};
  std::vector<GoalSolution> goal_solutions;
  std::optional<double> best_objective;
  std::size_t solver_queries{0};
  double wall_time{0.0};
  std::optional<OptimizationTree> tree;
  std::vector<QueryRecord> query_log;
  std::uint64_t seed{0};

  bool solved() const { return status == RunStatus::Solved; }

  /// Best goal objective among queries [0, n), or empty if none was found that early.
  std::optional<double> best_within_queries(std::size_t n) const
  {
    std::optional<double> best;
    for (const auto & r : query_log) {
      if (r.phase == Phase::Solve && r.queries <= n && r.best_so_far) { best = r.best_so_far; }
    }
    return best;
  }

  std::optional<double> best_within_seconds(double t) const
  {
    std::optional<double> best;
    for (const auto & r : query_log) {
      if (r.phase == Phase::Solve && r.seconds <= t && r.best_so_far) { best = r.best_so_far; }
    }
    return best;
  }
};

/// One CSV row per query-log entry; the header is written when `header` is set.
inline void write_query_log_csv(std::ostream & os, const RunResult & r, bool header = true)
{
  const std::size_t d = r.query_log.empty() ? 0 : r.query_log.front().lambda.dim();
  if (header) {
    os << "seed,iter,phase";
    for (std::size_t k = 0; k < d; ++k) { os << ",lambda" << k; }
    os << ",status,objective,violation,queries,seconds\n";
  }
  for (const auto & q : r.query_log) {
    os << r.seed << ',' << q.iter << ',' << (q.phase == Phase::Solve ? "solve" : "sample");
    for (std::size_t k = 0; k < d; ++k) { os << ',' << detail::format_double(q.lambda[k]); }
    if (q.status) {
      os << ',' << to_string(*q.status) << ',' << detail::format_double(q.objective) << ','
         << detail::format_double(q.violation);
    } else {
      os << ",,,";
    }
    os << ',' << q.queries << ',' << q.seconds << '\n';
  }
}

/**
 * @brief Step-size bookkeeping for LIHO.
 *
 * After k1 consecutive successes the step grows by c1, after k2 consecutive failures it shrinks
 * by c2. The run terminates once the step falls below epsilon.
 */
class LihoStepController
{
public:
  explicit LihoStepController(const LihoHyperparams & hp) : hp_(hp), step_(hp.delta_lambda_0) { hp_.validate(); }

  double step() const { return step_; }
  bool terminated() const { return step_ < hp_.epsilon; }

  void on_success()
  {
    failures_ = 0;
    if (++successes_ >= hp_.k1) {
      step_ *= hp_.c1;
      successes_ = 0;
    }
  }

  void on_failure()
  {
    successes_ = 0;
    if (++failures_ >= hp_.k2) {
      step_ *= hp_.c2;
      failures_ = 0;
    }
  }

private:
  LihoHyperparams hp_;
  double step_;
  std::size_t successes_{0};
  std::size_t failures_{0};
};

/**
 * @brief Picks an untried (node, homotopy point) pair.
 *
 * With probability P_g the pair is (random node not yet tried at the goal, goal); otherwise it is
 * uniform over all untried pairs. An empty branch falls through to the other one. Returns
 * nothing when every pair has been tried.
 */
inline std::optional<std::pair<NodeId, ParamId>> sample_attempt(const OptimizationTree & tree, double P_g, Rng & rng)
{
  const bool goal_branch = rng.bernoulli(P_g);
  std::vector<NodeId> goal_candidates;
  for (const auto & n : tree.nodes()) {
    if (!tree.attempted(n.id, OptimizationTree::goal_id())) { goal_candidates.push_back(n.id); }
  }
  if (goal_branch && !goal_candidates.empty()) {
    return std::pair{goal_candidates[rng.index(goal_candidates.size())], OptimizationTree::goal_id()};
  }
  const std::size_t total = tree.nodes().size() * tree.params().size();
  const std::size_t untried = total - tree.attempts().size();
  if (untried == 0) { return std::nullopt; }
  // k-th untried pair in (node, param) order
  std::size_t k = rng.index(untried);
  for (const auto & n : tree.nodes()) {
    for (ParamId p = 0; p < tree.params().size(); ++p) {
      if (tree.attempted(n.id, p)) { continue; }
      if (k == 0) { return std::pair{n.id, p}; }
      --k;
    }
  }
  return std::nullopt;
}

/// Optional observation points for P-HO, used by the structural checks.
struct PhoHooks
{
  /// Called after every iteration with the iteration index and the current tree.
  std::function<void(std::size_t, const OptimizationTree &)> after_iteration;
};

namespace detail {

/// Solver access shared by the drivers: budget accounting, success test and query log.
class QueryRunner
{
public:
  QueryRunner(
    const ParamNLP & nlp, const ParamMap & map, const SolverSettings & settings, const Budget & budget,
    RunResult & result)
      : nlp_(nlp), map_(map), settings_(settings), budget_(budget), result_(result),
        start_(std::chrono::steady_clock::now())
  {
    map_.validate();
    budget_.validate();
    settings_.validate();
    if (static_cast<std::size_t>(map_.theta_easy.size()) != nlp_.param_dim) {
      throw ConfigError("parameter map size does not match the problem's parameter dimension");
    }
  }

  double elapsed() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

  bool exhausted() const
  {
    return result_.solver_queries >= budget_.max_solver_queries || elapsed() >= budget_.max_wall_time;
  }

  struct Outcome
  {
    SolveReport report;
    bool success;
  };

  /// Solve at lambda from x_init; empty when the budget does not allow another query.
  std::optional<Outcome> query(const HomotopyPoint & lambda, const Vec & x_init, std::size_t iter)
  {
    if (exhausted()) { return std::nullopt; }
    const Vec theta = map_params(map_, lambda);
    SolverSettings s = settings_;
    if (std::isfinite(budget_.max_wall_time)) {
      const double left = std::max(1e-3, budget_.max_wall_time - elapsed());
      s.max_wall_time = s.max_wall_time > 0.0 ? std::min(s.max_wall_time, left) : left;
    }
    Outcome out{solve(nlp_, theta, x_init, s), false};
    out.success = out.report.converged() && is_feasible(nlp_, out.report.x_star, theta, settings_.feasibility());
    ++result_.solver_queries;

    QueryRecord rec;
    rec.iter = iter;
    rec.phase = Phase::Solve;
    rec.lambda = lambda;
    rec.status = out.report.status;
    rec.accepted = out.success;
    rec.objective = out.report.objective;
    rec.violation = out.report.constraint_violation;
    rec.queries = result_.solver_queries;
    rec.seconds = elapsed();
    rec.best_so_far = result_.best_objective;
    result_.query_log.push_back(std::move(rec));
    return out;
  }

  void log_sample(const HomotopyPoint & lambda, std::size_t iter)
  {
    QueryRecord rec;
    rec.iter = iter;
    rec.phase = Phase::Sample;
    rec.lambda = lambda;
    rec.queries = result_.solver_queries;
    rec.seconds = elapsed();
    rec.best_so_far = result_.best_objective;
    result_.query_log.push_back(std::move(rec));
  }

  /// Registers a goal solution and refreshes the best-so-far of the latest log row.
  void add_goal(const Vec & x, double objective)
  {
    result_.goal_solutions.push_back({x, objective});
    if (!result_.best_objective || objective < *result_.best_objective) { result_.best_objective = objective; }
    if (!result_.query_log.empty()) { result_.query_log.back().best_so_far = result_.best_objective; }
  }

  void finish(RunStatus status)
  {
    result_.status = status;
    result_.wall_time = elapsed();
  }

  std::size_t homotopy_dim() const { return map_.homotopy_dim; }

private:
  const ParamNLP & nlp_;
  const ParamMap & map_;
  const SolverSettings & settings_;
  Budget budget_;
  RunResult & result_;
  std::chrono::steady_clock::time_point start_;
};

inline HomotopyPoint uniform_point(std::size_t d, Rng & rng)
{
  Vec l(static_cast<Eigen::Index>(d));
  for (Eigen::Index k = 0; k < l.size(); ++k) { l[k] = rng.uniform(); }
  return HomotopyPoint(std::move(l));
}

}  // namespace detail

/**
 * @brief Probabilistic homotopy optimization.
 *
 * Alternates a solve phase (try an untried node/point pair) and a sample phase (add a uniform
 * homotopy point) depending on whether the solve/sample ratio exceeds rho_A. Keeps going after
 * the first goal solution until q iterations or the budget run out.
 */
inline RunResult run_pho(
  const ParamNLP & nlp, const ParamMap & map, const Vec & x0, const PhoHyperparams & hp, const Budget & budget,
  std::uint64_t seed, const SolverSettings & settings = {}, double similarity_tol = OptimizationTree::kDefaultSimilarityTol,
  UniquenessScope scope = UniquenessScope::SameLambda, const PhoHooks & hooks = {})
{
  hp.validate();
  RunResult result;
  result.seed = seed;
  detail::QueryRunner runner(nlp, map, settings, budget, result);
  Rng rng(seed);
  const std::size_t d = map.homotopy_dim;

  const auto root = runner.query(HomotopyPoint::zeros(d), x0, 0);
  if (!root || !root->success) {
    runner.finish(root ? RunStatus::Failed : RunStatus::BudgetExhausted);
    return result;
  }
  result.tree = OptimizationTree::init(d, root->report.x_star, root->report.objective, similarity_tol, scope);
  OptimizationTree & tree = *result.tree;

  for (std::size_t iter = 1; iter <= hp.q; ++iter) {
    if (runner.exhausted()) { break; }
    std::optional<std::pair<NodeId, ParamId>> pick;
    if (tree.solve_sample_ratio() <= hp.rho_A) { pick = sample_attempt(tree, hp.P_g, rng); }
    if (pick) {
      const auto [node_id, lambda_id] = *pick;
      tree.record_attempt(node_id, lambda_id);
      const HomotopyPoint lambda = tree.param(lambda_id);
      const auto out = runner.query(lambda, tree.node(node_id).x_star, iter);
      if (!out) { break; }
      if (out->success) {
        const auto added = tree.admit_node(out->report.x_star, lambda_id, node_id, out->report.objective);
        if (added && lambda.is_goal()) {
          runner.add_goal(out->report.x_star, out->report.objective);
          if (hp.stop_at_first_goal) { break; }
        }
      }
    } else {
      const HomotopyPoint lambda = detail::uniform_point(d, rng);
      tree.add_param(lambda);
      runner.log_sample(lambda, iter);
    }
    if (hooks.after_iteration) { hooks.after_iteration(iter, tree); }
  }
  runner.finish(result.goal_solutions.empty() ? RunStatus::BudgetExhausted : RunStatus::Solved);
  return result;
}

/**
 * @brief RRT-style homotopy optimization.
 *
 * Proposes the goal with probability P_g and a uniform point otherwise, solves from the node with
 * the nearest homotopy point and adds every success. Returns at the first goal solution.
 */
inline RunResult run_rho(
  const ParamNLP & nlp, const ParamMap & map, const Vec & x0, const RhoHyperparams & hp, const Budget & budget,
  std::uint64_t seed, const SolverSettings & settings = {})
{
  hp.validate();
  RunResult result;
  result.seed = seed;
  detail::QueryRunner runner(nlp, map, settings, budget, result);
  Rng rng(seed);
  const std::size_t d = map.homotopy_dim;

  const auto root = runner.query(HomotopyPoint::zeros(d), x0, 0);
  if (!root || !root->success) {
    runner.finish(root ? RunStatus::Failed : RunStatus::BudgetExhausted);
    return result;
  }
  result.tree = OptimizationTree::init(d, root->report.x_star, root->report.objective);
  OptimizationTree & tree = *result.tree;

  for (std::size_t iter = 1; iter <= hp.q; ++iter) {
    const HomotopyPoint lambda = rng.bernoulli(hp.P_g) ? HomotopyPoint::ones(d) : detail::uniform_point(d, rng);
    const ParamId lambda_id = tree.add_param(lambda);
    const NodeId near = tree.nearest_node(lambda);
    const auto out = runner.query(lambda, tree.node(near).x_star, iter);
    if (!out) { break; }
    if (!tree.attempted(near, lambda_id)) { tree.record_attempt(near, lambda_id); }
    if (!out->success) { continue; }
    tree.add_node(out->report.x_star, lambda_id, near, out->report.objective);
    if (lambda.is_goal()) {
      runner.add_goal(out->report.x_star, out->report.objective);
      runner.finish(RunStatus::Solved);
      return result;
    }
  }
  runner.finish(RunStatus::BudgetExhausted);
  return result;
}

/**
 * @brief Linear-interpolation homotopy with adaptive steps along a scalar lambda.
 */
inline RunResult run_liho(
  const ParamNLP & nlp, const ParamMap & map, const Vec & x0, const LihoHyperparams & hp, const Budget & budget,
  const SolverSettings & settings = {})
{
  hp.validate();
  if (map.homotopy_dim != 1) { throw ConfigError("LIHO needs a scalar homotopy parameter (homotopy_dim = 1)"); }
  RunResult result;
  detail::QueryRunner runner(nlp, map, settings, budget, result);

  const auto root = runner.query(HomotopyPoint::zeros(1), x0, 0);
  if (!root || !root->success) {
    runner.finish(root ? RunStatus::Failed : RunStatus::BudgetExhausted);
    return result;
  }
  LihoStepController step(hp);
  double base = 0.0;
  Vec x = root->report.x_star;
  for (std::size_t iter = 1;; ++iter) {
    if (step.terminated()) {
      runner.finish(RunStatus::Failed);
      return result;
    }
    const double next = std::min(base + step.step(), 1.0);
    const auto out = runner.query(HomotopyPoint::constant(1, next), x, iter);
    if (!out) { break; }
    if (out->success) {
      x = out->report.x_star;
      base = next;
      if (next == 1.0) {
        runner.add_goal(x, out->report.objective);
        runner.finish(RunStatus::Solved);
        return result;
      }
      step.on_success();
    } else {
      step.on_failure();
      if (!hp.rollback) { base = next; }
    }
  }
  runner.finish(RunStatus::BudgetExhausted);
  return result;
}

/// Easy problem from x0, then the goal problem straight from the easy solution: two queries.
inline RunResult run_one_depth(
  const ParamNLP & nlp, const ParamMap & map, const Vec & x0, const Budget & budget, const SolverSettings & settings = {})
{
  RunResult result;
  detail::QueryRunner runner(nlp, map, settings, budget, result);
  const std::size_t d = map.homotopy_dim;
  const auto root = runner.query(HomotopyPoint::zeros(d), x0, 0);
  if (!root || !root->success) {
    runner.finish(root ? RunStatus::Failed : RunStatus::BudgetExhausted);
    return result;
  }
  const auto goal = runner.query(HomotopyPoint::ones(d), root->report.x_star, 1);
  if (!goal) {
    runner.finish(RunStatus::BudgetExhausted);
    return result;
  }
  if (!goal->success) {
    runner.finish(RunStatus::Failed);
    return result;
  }
  runner.add_goal(goal->report.x_star, goal->report.objective);
  runner.finish(RunStatus::Solved);
  return result;
}

}  // namespace pho
