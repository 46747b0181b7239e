#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include <pho/algorithms.hpp>
#include <pho/bench/selftest.hpp>
#include <pho/problems/synthetic.hpp>

using namespace pho;

namespace {

// f = (x - theta)^2 on [-10, 10], a convex family with a single global basin
ParamNLP convex_family()
{
  ParamNLP nlp;
  nlp.n_vars = 1;
  nlp.param_dim = 1;
  nlp.objective = [](const Vec & x, const Vec & th) { return (x[0] - th[0]) * (x[0] - th[0]); };
  nlp.constraints = [](const Vec &, const Vec &) { return Vec(); };
  nlp.bounds = [](const Vec &) { return Bounds{Vec::Constant(1, -10.0), Vec::Constant(1, 10.0)}; };
  return nlp;
}

ParamMap degenerate_map() { return ParamMap::scalar(Vec::Constant(1, 3.0), Vec::Constant(1, 3.0)); }

ParamNLP unsolvable()
{
  auto nlp = convex_family();
  nlp.n_eq = 1;
  nlp.constraints = [](const Vec & x, const Vec &) { return Vec::Constant(1, x[0] * x[0] + 1.0); };
  return nlp;
}

SolverSettings quick_solver()
{
  SolverSettings s;
  s.max_outer_iters = 15;
  return s;
}

std::size_t first_goal_query(const RunResult & r)
{
  for (const auto & q : r.query_log) {
    if (q.best_so_far) { return q.queries; }
  }
  return 0;
}

}  // namespace

TEST(LihoStep, TraceMatchesTableValues)
{
  LihoStepController c(LihoHyperparams{});
  std::vector<double> trace{c.step()};
  c.on_success();
  trace.push_back(c.step());
  c.on_success();
  trace.push_back(c.step());
  c.on_failure();
  trace.push_back(c.step());
  ASSERT_EQ(trace.size(), 4u);
  EXPECT_DOUBLE_EQ(trace[0], 0.01);
  EXPECT_DOUBLE_EQ(trace[1], 0.01);
  EXPECT_DOUBLE_EQ(trace[2], 0.015);
  EXPECT_DOUBLE_EQ(trace[3], 0.0045);
}

TEST(LihoStep, SingleFailureShrinks)
{
  LihoStepController c(LihoHyperparams{});
  c.on_failure();
  EXPECT_DOUBLE_EQ(c.step(), 0.003);
}

TEST(LihoStep, TerminatesExactlyBelowEpsilon)
{
  const LihoHyperparams hp;
  // independent count: smallest n with 0.01 * 0.3^n < 1e-9
  int expected = 0;
  for (double s = hp.delta_lambda_0; !(s < hp.epsilon); s *= hp.c2) { ++expected; }
  LihoStepController c(hp);
  int failures = 0;
  while (!c.terminated()) {
    c.on_failure();
    ++failures;
    if (!c.terminated()) { ASSERT_GE(c.step(), hp.epsilon); }
  }
  EXPECT_EQ(failures, expected);
  EXPECT_EQ(failures, 14);
  EXPECT_LT(c.step(), hp.epsilon);
}

TEST(LihoStep, SuccessResetsFailureStreak)
{
  LihoHyperparams hp;
  hp.k2 = 2;
  LihoStepController c(hp);
  c.on_failure();
  c.on_success();
  c.on_failure();
  EXPECT_DOUBLE_EQ(c.step(), 0.01);
  c.on_failure();
  EXPECT_DOUBLE_EQ(c.step(), 0.003);
}

TEST(SampleAttempt, ForcedGoalBranch)
{
  auto t = OptimizationTree::init(1, Vec::Zero(1), 0.0);
  Rng rng(1);
  const auto pick = sample_attempt(t, 1.0, rng);
  ASSERT_TRUE(pick.has_value());
  EXPECT_EQ(pick->first, 0u);
  EXPECT_EQ(pick->second, OptimizationTree::goal_id());
}

TEST(SampleAttempt, EmptyGoalBranchFallsBack)
{
  auto t = OptimizationTree::init(1, Vec::Zero(1), 0.0);
  t.record_attempt(0, OptimizationTree::goal_id());
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto pick = sample_attempt(t, 1.0, rng);
    ASSERT_TRUE(pick.has_value());
    EXPECT_EQ(*pick, (std::pair<NodeId, ParamId>{0, 1}));
  }
  t.record_attempt(0, 1);
  EXPECT_FALSE(sample_attempt(t, 0.3, rng).has_value());
}

TEST(SampleAttempt, UniformOverUntriedPairsChiSquare)
{
  auto t = OptimizationTree::init(1, Vec::Zero(1), 0.0);
  t.add_param(HomotopyPoint::constant(1, 0.5));
  t.add_node(Vec::Ones(1), 1, 0, 0.0);
  t.add_node(Vec::Ones(1) * 2.0, 1, 0, 0.0);
  ASSERT_EQ(t.nodes().size() * t.params().size(), 9u);
  Rng rng(12345);
  constexpr int draws = 10000;
  std::array<int, 9> counts{};
  for (int i = 0; i < draws; ++i) {
    const auto pick = sample_attempt(t, 0.0, rng);
    ASSERT_TRUE(pick.has_value());
    ++counts[pick->first * 3 + pick->second];
  }
  double chi2 = 0.0;
  const double expected = draws / 9.0;
  for (int c : counts) { chi2 += (c - expected) * (c - expected) / expected; }
  // 99th percentile of chi-square with 8 degrees of freedom
  EXPECT_LT(chi2, 20.09);
}

TEST(SampleAttempt, NeverReturnsTriedPair)
{
  auto t = OptimizationTree::init(1, Vec::Zero(1), 0.0);
  t.add_param(HomotopyPoint::constant(1, 0.25));
  t.add_param(HomotopyPoint::constant(1, 0.75));
  t.add_node(Vec::Ones(1), 2, 0, 0.0);
  Rng rng(9);
  std::size_t picks = 0;
  while (auto pick = sample_attempt(t, 0.3, rng)) {
    ASSERT_FALSE(t.attempted(pick->first, pick->second));
    t.record_attempt(pick->first, pick->second);
    ++picks;
  }
  EXPECT_EQ(picks, 8u);
}

TEST(Pho, DegenerateMapSolvesQuickly)
{
  const auto r = run_pho(convex_family(), degenerate_map(), Vec::Zero(1), PhoHyperparams{}, Budget::queries(10), 4);
  ASSERT_EQ(r.status, RunStatus::Solved);
  EXPECT_GE(r.goal_solutions.size(), 1u);
  EXPECT_LE(first_goal_query(r), 4u);
  EXPECT_NEAR(r.goal_solutions.front().x_star[0], 3.0, 1e-6);
}

TEST(Pho, UnsolvableRootFails)
{
  const auto r = run_pho(unsolvable(), degenerate_map(), Vec::Zero(1), PhoHyperparams{}, Budget::queries(10), 4,
                         quick_solver());
  EXPECT_EQ(r.status, RunStatus::Failed);
  EXPECT_EQ(r.solver_queries, 1u);
  EXPECT_FALSE(r.tree.has_value());
}

TEST(Pho, InvalidHyperparametersRejected)
{
  PhoHyperparams hp;
  hp.rho_A = 1.5;
  EXPECT_THROW(run_pho(convex_family(), degenerate_map(), Vec::Zero(1), hp, Budget::queries(5), 0), ConfigError);
  EXPECT_THROW(run_pho(convex_family(), degenerate_map(), Vec::Zero(1), PhoHyperparams{}, Budget{}, 0), ConfigError);
}

TEST(Pho, BifurcationFindsBothBranches)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::Bifurcation);
  const auto oracle = p.goal_minima();
  ASSERT_EQ(oracle.size(), 2u);
  EXPECT_NEAR(oracle[0].x, -std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(oracle[1].x, std::sqrt(0.5), 1e-6);
  int both = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(200), seed);
    std::set<int> hit;
    for (const auto & g : r.goal_solutions) {
      for (int k = 0; k < 2; ++k) {
        if (std::abs(g.x_star[0] - oracle[k].x) <= 1e-3) { hit.insert(k); }
      }
    }
    both += hit.size() == 2 ? 1 : 0;
  }
  EXPECT_GE(both, 27);
}

TEST(Pho, BudgetIsRespected)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::AsymmetricDoubleWell);
  for (std::size_t n : {1u, 2u, 7u, 40u}) {
    const auto r = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(n), 3);
    EXPECT_LE(r.solver_queries, n);
    std::size_t solves = 0;
    for (const auto & q : r.query_log) { solves += q.phase == Phase::Solve ? 1 : 0; }
    EXPECT_EQ(solves, r.solver_queries);
  }
}

TEST(Pho, WallTimeBudgetStopsRun)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::DoubleWell);
  PhoHyperparams hp;
  hp.q = std::numeric_limits<std::size_t>::max();
  const auto r = run_pho(p.nlp, p.map, p.x0, hp, Budget{std::numeric_limits<std::size_t>::max(), 0.2}, 1);
  EXPECT_LT(r.wall_time, 1.0);
}

TEST(Pho, SameSeedSameTrace)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::Disconnected);
  const auto a = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(60), 77);
  const auto b = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(60), 77);
  EXPECT_TRUE(bench::same_trace(a, b));
  const auto c = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(60), 78);
  EXPECT_FALSE(bench::same_trace(a, c));
}

TEST(Pho, RatioStaysInUnitInterval)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::Fold);
  PhoHooks hooks;
  std::size_t calls = 0;
  hooks.after_iteration = [&](std::size_t, const OptimizationTree & t) {
    ++calls;
    const double r = t.solve_sample_ratio();
    ASSERT_GE(r, 0.0);
    ASSERT_LE(r, 1.0);
  };
  run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(100), 5, {}, OptimizationTree::kDefaultSimilarityTol,
          UniquenessScope::SameLambda, hooks);
  EXPECT_GT(calls, 0u);
}

TEST(Pho, StopAtFirstGoalKeepsPrefix)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::Bifurcation);
  PhoHyperparams early;
  early.stop_at_first_goal = true;
  const auto full = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(100), 21);
  const auto cut = run_pho(p.nlp, p.map, p.x0, early, Budget::queries(100), 21);
  ASSERT_EQ(cut.status, full.status);
  ASSERT_LE(cut.query_log.size(), full.query_log.size());
  for (std::size_t i = 0; i < cut.query_log.size(); ++i) {
    EXPECT_EQ(cut.query_log[i].lambda, full.query_log[i].lambda);
    EXPECT_EQ(cut.query_log[i].accepted, full.query_log[i].accepted);
  }
  EXPECT_EQ(cut.goal_solutions.size(), 1u);
}

TEST(Rho, DegenerateMapSolvesOnFirstGoalProposal)
{
  const auto r = run_rho(convex_family(), degenerate_map(), Vec::Zero(1), RhoHyperparams{}, Budget::queries(50), 8);
  ASSERT_EQ(r.status, RunStatus::Solved);
  ASSERT_EQ(r.goal_solutions.size(), 1u);
  std::size_t goal_proposals = 0;
  for (const auto & q : r.query_log) { goal_proposals += (q.iter > 0 && q.lambda.is_goal()) ? 1 : 0; }
  EXPECT_EQ(goal_proposals, 1u);
}

TEST(Rho, BifurcationReturnsOneGoalSolution)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::Bifurcation);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = run_rho(p.nlp, p.map, p.x0, RhoHyperparams{}, Budget::queries(200), seed);
    ASSERT_EQ(r.status, RunStatus::Solved) << "seed " << seed;
    EXPECT_EQ(r.goal_solutions.size(), 1u);
  }
}

TEST(Rho, BudgetIsRespected)
{
  const auto r = run_rho(unsolvable(), degenerate_map(), Vec::Zero(1), RhoHyperparams{}, Budget::queries(3), 8,
                         quick_solver());
  EXPECT_EQ(r.status, RunStatus::Failed);
  const auto p = synthetic::make_synthetic(synthetic::Kind::Fold);
  for (std::size_t n : {1u, 5u, 17u}) {
    EXPECT_LE(run_rho(p.nlp, p.map, p.x0, RhoHyperparams{}, Budget::queries(n), 2).solver_queries, n);
  }
}

TEST(Liho, SingleFullStep)
{
  LihoHyperparams hp;
  hp.delta_lambda_0 = 1.0;
  const auto r = run_liho(convex_family(), degenerate_map(), Vec::Zero(1), hp, Budget::queries(10));
  EXPECT_EQ(r.status, RunStatus::Solved);
  EXPECT_EQ(r.solver_queries, 2u);
}

TEST(Liho, MultidimensionalMapRejected)
{
  const auto m = ParamMap::per_component(Vec::Zero(2), Vec::Ones(2));
  auto nlp = convex_family();
  nlp.param_dim = 2;
  EXPECT_THROW(run_liho(nlp, m, Vec::Zero(1), LihoHyperparams{}, Budget::queries(10)), ConfigError);
}

TEST(Liho, WalksConvexFamily)
{
  const auto map = ParamMap::scalar(Vec::Constant(1, -2.0), Vec::Constant(1, 4.0));
  const auto r = run_liho(convex_family(), map, Vec::Zero(1), LihoHyperparams{}, Budget::queries(1000));
  ASSERT_EQ(r.status, RunStatus::Solved);
  EXPECT_NEAR(r.goal_solutions.front().x_star[0], 4.0, 1e-6);
  // every step succeeds: lambda grows 0.01, 0.01, 0.015, 0.015, ... so the query count follows
  std::size_t expected = 1;
  double lambda = 0.0;
  LihoStepController oracle(LihoHyperparams{});
  while (lambda < 1.0) {
    lambda = std::min(lambda + oracle.step(), 1.0);
    oracle.on_success();
    ++expected;
  }
  EXPECT_EQ(r.solver_queries, expected);
}

TEST(Liho, FailsOnUnsolvableRoot)
{
  const auto r = run_liho(unsolvable(), degenerate_map(), Vec::Zero(1), LihoHyperparams{}, Budget::queries(5),
                          quick_solver());
  EXPECT_EQ(r.status, RunStatus::Failed);
}

TEST(OneDepth, DegenerateAndConvexFamiliesSolve)
{
  const auto a = run_one_depth(convex_family(), degenerate_map(), Vec::Zero(1), Budget::queries(2));
  EXPECT_EQ(a.status, RunStatus::Solved);
  EXPECT_EQ(a.solver_queries, 2u);
  const auto map = ParamMap::scalar(Vec::Constant(1, -5.0), Vec::Constant(1, 5.0));
  const auto b = run_one_depth(convex_family(), map, Vec::Zero(1), Budget::queries(2));
  ASSERT_EQ(b.status, RunStatus::Solved);
  EXPECT_NEAR(b.goal_solutions.front().x_star[0], 5.0, 1e-6);
}

TEST(OneDepth, BudgetOfOneIsExhausted)
{
  const auto r = run_one_depth(convex_family(), degenerate_map(), Vec::Zero(1), Budget::queries(1));
  EXPECT_EQ(r.status, RunStatus::BudgetExhausted);
  EXPECT_EQ(r.solver_queries, 1u);
}

TEST(RunResult, BestWithinQueriesIsMonotone)
{
  const auto p = synthetic::make_synthetic(synthetic::Kind::AsymmetricDoubleWell);
  const auto r = run_pho(p.nlp, p.map, p.x0, PhoHyperparams{}, Budget::queries(150), 11);
  std::optional<double> prev;
  for (std::size_t n = 0; n <= 150; ++n) {
    const auto b = r.best_within_queries(n);
    if (prev) {
      ASSERT_TRUE(b.has_value());
      EXPECT_LE(*b, *prev);
    }
    if (b) { prev = b; }
  }
  EXPECT_EQ(r.best_within_queries(150), r.best_objective);
}
