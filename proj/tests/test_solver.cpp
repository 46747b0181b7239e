#include <random>

#include <gtest/gtest.h>

#include <pho/problems/cartpole.hpp>
#include <pho/solver.hpp>

using namespace pho;

namespace {

ParamNLP shifted_parabola()
{
  ParamNLP nlp;
  nlp.n_vars = 1;
  nlp.param_dim = 0;
  nlp.objective = [](const Vec & x, const Vec &) { return (x[0] - 2.0) * (x[0] - 2.0); };
  nlp.constraints = [](const Vec &, const Vec &) { return Vec(); };
  nlp.bounds = [](const Vec &) { return Bounds{Vec::Constant(1, -kInf), Vec::Constant(1, kInf)}; };
  return nlp;
}

// min x0^2 + x1^2 s.t. x0 + x1 = 1, finite-difference derivatives only
ParamNLP circle_line()
{
  ParamNLP nlp;
  nlp.n_vars = 2;
  nlp.n_eq = 1;
  nlp.param_dim = 0;
  nlp.objective = [](const Vec & x, const Vec &) { return x.squaredNorm(); };
  nlp.constraints = [](const Vec & x, const Vec &) { return Vec::Constant(1, x[0] + x[1] - 1.0); };
  nlp.bounds = [](const Vec &) { return Bounds{Vec::Constant(2, -kInf), Vec::Constant(2, kInf)}; };
  return nlp;
}

}  // namespace

TEST(Solver, UnconstrainedQuadratic)
{
  const auto rep = solve(shifted_parabola(), Vec(), Vec::Zero(1));
  EXPECT_EQ(rep.status, SolveStatus::Converged);
  EXPECT_NEAR(rep.x_star[0], 2.0, 1e-6);
  EXPECT_NEAR(rep.objective, 0.0, 1e-10);
}

TEST(Solver, EqualityConstrainedQuadraticFromRandomStarts)
{
  const auto nlp = circle_line();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 10; ++i) {
    const Vec x0 = (Vec(2) << u(gen), u(gen)).finished();
    const auto rep = solve(nlp, Vec(), x0);
    ASSERT_EQ(rep.status, SolveStatus::Converged);
    // KKT: 2x = mu * (1, 1) and x0 + x1 = 1 give x = (1/2, 1/2)
    EXPECT_NEAR(rep.x_star[0], 0.5, 1e-6);
    EXPECT_NEAR(rep.x_star[1], 0.5, 1e-6);
    EXPECT_TRUE(is_feasible(nlp, rep.x_star, Vec()));
  }
}

TEST(Solver, BoundsAreRespected)
{
  auto nlp = shifted_parabola();
  nlp.bounds = [](const Vec &) { return Bounds{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)}; };
  const auto rep = solve(nlp, Vec(), Vec::Zero(1));
  EXPECT_EQ(rep.status, SolveStatus::Converged);
  EXPECT_DOUBLE_EQ(rep.x_star[0], 1.0);
}

TEST(Solver, ProjectedGradientModeAgrees)
{
  SolverSettings s;
  s.inner_method = InnerMethod::ProjectedGradient;
  s.kkt_tol = 1e-9;
  const auto rep = solve(circle_line(), Vec(), (Vec(2) << 3.0, -7.0).finished(), s);
  ASSERT_EQ(rep.status, SolveStatus::Converged);
  EXPECT_NEAR(rep.x_star[0], 0.5, 1e-6);
  EXPECT_NEAR(rep.x_star[1], 0.5, 1e-6);
}

TEST(Solver, NonFiniteObjectiveIsReported)
{
  auto nlp = shifted_parabola();
  nlp.objective = [](const Vec & x, const Vec &) { return std::log(x[0]); };
  EXPECT_EQ(solve(nlp, Vec(), Vec::Constant(1, -1.0)).status, SolveStatus::NonFinite);
}

TEST(Solver, InfeasibleConstraintsDoNotConverge)
{
  ParamNLP nlp;
  nlp.n_vars = 1;
  nlp.n_eq = 1;
  nlp.param_dim = 0;
  nlp.objective = [](const Vec & x, const Vec &) { return x[0] * x[0]; };
  nlp.constraints = [](const Vec & x, const Vec &) { return Vec::Constant(1, x[0] * x[0] + 1.0); };
  nlp.bounds = [](const Vec &) { return Bounds{Vec::Constant(1, -kInf), Vec::Constant(1, kInf)}; };
  SolverSettings s;
  s.max_outer_iters = 20;
  const auto rep = solve(nlp, Vec(), Vec::Constant(1, 0.3), s);
  EXPECT_NE(rep.status, SolveStatus::Converged);
}

TEST(Solver, DimensionMismatchIsConfigError)
{
  EXPECT_THROW(solve(circle_line(), Vec(), Vec::Zero(3)), ConfigError);
  SolverSettings bad;
  bad.kkt_tol = -1.0;
  EXPECT_THROW(solve(circle_line(), Vec(), Vec::Zero(2), bad), ConfigError);
}

TEST(Solver, PropertyIdempotentAtSolution)
{
  const auto nlp = circle_line();
  const auto first = solve(nlp, Vec(), (Vec(2) << 4.0, 9.0).finished());
  ASSERT_TRUE(first.converged());
  const auto again = solve(nlp, Vec(), first.x_star);
  ASSERT_TRUE(again.converged());
  EXPECT_LE((again.x_star - first.x_star).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(Solver, PropertyDeterministic)
{
  const auto nlp = cartpole::build_nlp();
  const Vec th = cartpole::easy_params().to_vector();
  SolverSettings s;
  s.max_outer_iters = 3;
  const auto a = solve(nlp, th, Vec::Zero(505), s);
  const auto b = solve(nlp, th, Vec::Zero(505), s);
  EXPECT_EQ(a.status, b.status);
  EXPECT_TRUE((a.x_star.array() == b.x_star.array()).all());
  EXPECT_EQ(a.outer_iters, b.outer_iters);
  EXPECT_EQ(a.inner_iters_total, b.inner_iters_total);
}

TEST(Solver, CartPoleEasyEndpointConvergesFromZeros)
{
  const auto nlp = cartpole::build_nlp();
  const Vec th = cartpole::easy_params().to_vector();
  const auto rep = solve(nlp, th, Vec::Zero(505));
  ASSERT_EQ(rep.status, SolveStatus::Converged);
  EXPECT_TRUE(is_feasible(nlp, rep.x_star, th));
  // residuals checked directly: boundary states and a defect at the middle of the horizon
  const auto rows = cartpole::unpack(rep.x_star);
  EXPECT_NEAR(rows.back().s[2], cartpole::goal_state()[2], 1e-6);
  EXPECT_NEAR(rows.front().s[2], 0.0, 1e-6);
  EXPECT_LE(constraint_violation(nlp, rep.x_star, th), 1e-6);
}

TEST(Solver, CartPoleHardParametersFailFromZeros)
{
  const auto nlp = cartpole::build_nlp();
  for (const auto & p : {cartpole::Params{20.0, 30.0, 100.0, 1.3, 1.6}, cartpole::Params{20.0, 60.0, 100.0, 2.0, 1.6}}) {
    const auto rep = solve(nlp, p.to_vector(), Vec::Zero(505));
    EXPECT_NE(rep.status, SolveStatus::Converged) << "m_pole " << p.m_pole;
  }
}
