#pragma once

/**
 * @file
 * @brief Augmented Lagrangian solver for equality-constrained, box-bounded NLPs.
 *
 * Outer loop:
 *   1. x <- argmin_{l <= x <= u}  L_A(x) = f(x) + mu^T c(x) + (rho/2) |c(x)|^2
 *   2. mu <- mu + rho c(x)
 *   3. stop when |c|_inf <= eq_tol and |x - P(x - grad L)|_inf <= kkt_tol
 *   4. rho <- growth * rho unless |c|_inf dropped by a factor 10
 *
 * The bound-constrained subproblem is solved either by a projected Newton method (free
 * variables get a regularized Newton step, active ones stay on their bound) or by plain
 * projected gradient descent. Both use an Armijo backtracking search along the projection arc.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include <Eigen/SparseCholesky>

#include "derivatives.hpp"
#include "nlp.hpp"

namespace pho {

enum class InnerMethod { ProjectedNewton, ProjectedGradient };

/// Curvature model for the projected Newton step.
enum class HessianMode { Exact, GaussNewton, Hybrid };

struct SolverSettings
{
  std::size_t max_outer_iters{50};
  std::size_t max_inner_iters{2000};
  double kkt_tol{1e-4};
  double eq_tol{1e-6};
  double bound_tol{1e-8};
  double penalty_init{10.0};
  double penalty_growth{10.0};
  double penalty_max{1e10};
  double inner_step_tol{1e-14};
  /// Armijo parameters.
  double armijo_slope{1e-4};
  double backtrack_factor{0.5};
  InnerMethod inner_method{InnerMethod::ProjectedNewton};
  HessianMode hessian{HessianMode::Hybrid};
  /// Start the outer loop from least-squares multipliers instead of zero.
  bool least_squares_multipliers{true};
  /// Relative decrease of L_A over 10 inner iterations below which the subproblem is stopped.
  double stagnation_tol{1e-8};
  /// The subproblem is abandoned (and the penalty raised) once |c| grows by this factor.
  double violation_blowup{10.0};
  /// Upper bound on the wall time of one solve in seconds; <= 0 disables it.
  double max_wall_time{0.0};
  /// Per-iteration trace, one `key=value` line per outer iteration.
  std::ostream * trace{nullptr};

  void validate() const
  {
    if (!(kkt_tol > 0.0) || !(eq_tol > 0.0) || !(bound_tol > 0.0) || !(inner_step_tol > 0.0)) {
      throw ConfigError("solver tolerances must be positive");
    }
    if (!(violation_blowup > 1.0)) { throw ConfigError("violation_blowup must exceed 1"); }
    if (!(penalty_growth > 1.0)) { throw ConfigError("penalty_growth must exceed 1"); }
    if (!(penalty_init > 0.0) || penalty_init > penalty_max) {
      throw ConfigError("penalty_init must be positive and not exceed penalty_max");
    }
    if (max_outer_iters == 0 || max_inner_iters == 0) { throw ConfigError("iteration limits must be positive"); }
    if (!(armijo_slope > 0.0 && armijo_slope < 1.0) || !(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
      throw ConfigError("line search parameters must lie in (0,1)");
    }
  }

  FeasibilityTolerance feasibility() const { return {eq_tol, bound_tol}; }
};

enum class SolveStatus { Converged, MaxIterations, Diverged, NonFinite };

inline std::string_view to_string(SolveStatus s)
{
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    case SolveStatus::Diverged: return "Diverged";
    case SolveStatus::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

struct SolveReport
{
  SolveStatus status{SolveStatus::MaxIterations};
  Vec x_star;
  double objective{kInf};
  double constraint_violation{kInf};
  /// Projected gradient of the Lagrangian, infinity norm.
  double kkt_residual{kInf};
  Vec multipliers;
  std::size_t outer_iters{0};
  std::size_t inner_iters_total{0};
  double wall_time{0.0};

  bool converged() const { return status == SolveStatus::Converged; }
};

namespace detail {

inline Vec project(const Vec & x, const Bounds & b) { return x.cwiseMax(b.lower).cwiseMin(b.upper); }

inline double projected_gradient_norm(const Vec & x, const Vec & g, const Bounds & b)
{
  return (x - project(x - g, b)).lpNorm<Eigen::Infinity>();
}

class AugmentedLagrangian
{
public:
  AugmentedLagrangian(const ParamNLP & nlp, const Vec & theta, const Bounds & bounds)
      : nlp_(nlp), theta_(theta), bounds_(bounds)
  {}

  Vec mu;
  double rho{10.0};

  double value(const Vec & x) const
  {
    const double f = nlp_.objective(x, theta_);
    if (nlp_.n_eq == 0) { return f; }
    const Vec c = nlp_.constraints(x, theta_);
    return f + mu.dot(c) + 0.5 * rho * c.squaredNorm();
  }

  /// Evaluate c, J and the gradient of L_A at x.
  void linearize(const Vec & x)
  {
    grad = objective_gradient(nlp_, x, theta_);
    if (nlp_.n_eq > 0) {
      c = nlp_.constraints(x, theta_);
      jac = constraint_jacobian(nlp_, x, theta_);
      grad += jac.transpose() * (mu + rho * c);
    } else {
      c.resize(0);
    }
  }

  /**
   * Hessian of L_A at the last linearization point (symmetric, full storage). The Gauss-Newton
   * variant drops the constraint curvature and is positive semidefinite when f is convex.
   */
  SpMat hessian(const Vec & x, bool gauss_newton) const
  {
    if (nlp_.n_eq == 0) { return lagrangian_hessian(nlp_, x, theta_, Vec()); }
    SpMat h = lagrangian_hessian(nlp_, x, theta_, gauss_newton ? Vec(Vec::Zero(c.size())) : Vec(mu + rho * c));
    const SpMat jt = jac.transpose();
    return h + rho * (jt * jac);
  }

  const Bounds & bounds() const { return bounds_; }

  Vec grad;
  Vec c;
  SpMat jac;

private:
  const ParamNLP & nlp_;
  const Vec & theta_;
  const Bounds & bounds_;
};

enum class InnerOutcome { Stationary, IterationLimit, Stalled, NonFinite, TimeLimit, ViolationBlowup };

struct InnerResult
{
  InnerOutcome outcome;
  std::size_t iterations;
};

/// Armijo search along the projection arc x(a) = P(x + a d).
inline std::optional<Vec> projected_line_search(
  const AugmentedLagrangian & al, const Vec & x, double fx, const Vec & d, double alpha0, const SolverSettings & s,
  bool & non_finite)
{
  double alpha = alpha0;
  for (int k = 0; k < 60; ++k) {
    Vec xa = project(x + alpha * d, al.bounds());
    const double decrease = al.grad.dot(xa - x);
    if (decrease >= 0.0 && (xa - x).lpNorm<Eigen::Infinity>() <= s.inner_step_tol) { return std::nullopt; }
    const double fa = al.value(xa);
    if (!std::isfinite(fa)) {
      non_finite = true;
    } else if (fa <= fx + s.armijo_slope * decrease) {
      non_finite = false;
      return xa;
    }
    alpha *= s.backtrack_factor;
  }
  return std::nullopt;
}

/// Factorization state reused across inner iterations while the Hessian pattern stays fixed.
class NewtonWorkspace
{
public:
  Eigen::SimplicialLDLT<SpMat> & factor_for(const SpMat & K)
  {
    const bool same = analyzed_ && K.rows() == rows_ && K.nonZeros() == static_cast<Eigen::Index>(inner_.size())
                      && std::equal(outer_.begin(), outer_.end(), K.outerIndexPtr())
                      && std::equal(inner_.begin(), inner_.end(), K.innerIndexPtr());
    if (!same) {
      rows_ = K.rows();
      outer_.assign(K.outerIndexPtr(), K.outerIndexPtr() + K.outerSize() + 1);
      inner_.assign(K.innerIndexPtr(), K.innerIndexPtr() + K.nonZeros());
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    return ldlt_;
  }

private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_{false};
  Eigen::Index rows_{0};
  std::vector<int> outer_;
  std::vector<int> inner_;
};

/**
 * Regularized Newton step on the free variables. Active rows and columns are replaced by the
 * identity so the matrix keeps one sparsity pattern. Returns an empty optional if no descent
 * step exists within the allowed regularization.
 */
inline std::optional<Vec> newton_direction(
  const AugmentedLagrangian & al, const Vec & x, const std::vector<char> & active, double & reg, bool gauss_newton,
  double max_reg_ratio, NewtonWorkspace & ws)
{
  const auto n = x.size();
  auto is_active = [&](Eigen::Index i) { return active[static_cast<std::size_t>(i)] != 0; };
  Vec g = al.grad;
  bool any_free = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (is_active(i)) {
      g[i] = 0.0;
    } else {
      any_free = true;
    }
  }
  if (!any_free) { return Vec::Zero(n); }

  SpMat I(n, n);
  I.setIdentity();
  SpMat K = al.hessian(x, gauss_newton) + 0.0 * I;
  K.makeCompressed();
  double diag_scale = 0.0;
  std::vector<double *> diag(static_cast<std::size_t>(n), nullptr);
  for (Eigen::Index k = 0; k < K.outerSize(); ++k) {
    for (SpMat::InnerIterator it(K, k); it; ++it) {
      const bool on_diag = it.row() == it.col();
      if (is_active(it.row()) || is_active(it.col())) {
        it.valueRef() = on_diag ? 1.0 : 0.0;
      } else if (on_diag) {
        diag_scale = std::max(diag_scale, std::abs(it.value()));
      }
      if (on_diag) { diag[static_cast<std::size_t>(k)] = &it.valueRef(); }
    }
  }
  std::vector<double> base(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < base.size(); ++i) { base[i] = *diag[i]; }

  auto & ldlt = ws.factor_for(K);
  const double reg_floor = 1e-10 * std::max(1.0, diag_scale);
  double delta = reg > 0.0 ? std::max(reg_floor, reg / 4.0) : 0.0;
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (delta > max_reg_ratio * std::max(1.0, diag_scale)) { return std::nullopt; }
    for (Eigen::Index i = 0; i < n; ++i) {
      *diag[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(i)] + (is_active(i) ? 0.0 : delta);
    }
    ldlt.factorize(K);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
      Vec d = ldlt.solve(-g);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (is_active(i)) { d[i] = 0.0; }
      }
      if (d.allFinite() && g.dot(d) < 0.0) {
        reg = delta;
        return d;
      }
    }
    delta = delta == 0.0 ? reg_floor : 10.0 * delta;
  }
  return std::nullopt;
}

inline InnerResult minimize_subproblem(
  AugmentedLagrangian & al, Vec & x, double omega, const SolverSettings & s,
  const std::chrono::steady_clock::time_point & start)
{
  const Bounds & b = al.bounds();
  double reg = 0.0;
  double gn_reg = 0.0;
  NewtonWorkspace exact_ws;
  NewtonWorkspace gn_ws;
  double bb_step = 1.0;
  Vec x_prev, g_prev;
  double v0 = -1.0;
  std::vector<double> history;
  for (std::size_t it = 0; it < s.max_inner_iters; ++it) {
    al.linearize(x);
    if (!al.grad.allFinite() || !al.c.allFinite()) { return {InnerOutcome::NonFinite, it}; }
    if (al.c.size() > 0) {
      // a penalty too small for the current multipliers lets L_A run away from feasibility
      const double v = al.c.lpNorm<Eigen::Infinity>();
      if (v0 < 0.0) {
        v0 = v;
      } else if (v > s.violation_blowup * std::max(v0, s.eq_tol) && v > 1e-2) {
        return {InnerOutcome::ViolationBlowup, it};
      }
    }
    const double pg = projected_gradient_norm(x, al.grad, b);
    if (pg <= omega) { return {InnerOutcome::Stationary, it}; }
    if (s.max_wall_time > 0.0
        && std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > s.max_wall_time) {
      return {InnerOutcome::TimeLimit, it};
    }
    const double fx = al.value(x);
    if (!std::isfinite(fx)) { return {InnerOutcome::NonFinite, it}; }
    history.push_back(fx);
    constexpr std::size_t window = 10;
    if (history.size() > window
        && history[history.size() - 1 - window] - fx <= s.stagnation_tol * std::max(1.0, std::abs(fx))) {
      return {InnerOutcome::Stalled, it};
    }

    std::optional<Vec> next;
    bool non_finite = false;
    if (s.inner_method == InnerMethod::ProjectedNewton) {
      // variables on a bound whose gradient pushes outward stay fixed
      const double eps = std::min(1e-6, pg);
      std::vector<char> active(static_cast<std::size_t>(x.size()), 0);
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool at_lower = x[i] <= b.lower[i] + eps && al.grad[i] > 0.0;
        const bool at_upper = x[i] >= b.upper[i] - eps && al.grad[i] < 0.0;
        active[static_cast<std::size_t>(i)] = (at_lower || at_upper || b.lower[i] == b.upper[i]) ? 1 : 0;
      }
      // exact curvature first; heavy regularization means it is too indefinite to be useful
      const bool try_exact = s.hessian != HessianMode::GaussNewton;
      std::optional<Vec> d;
      if (try_exact) {
        d = newton_direction(al, x, active, reg, false, s.hessian == HessianMode::Exact ? kInf : 1e-6, exact_ws);
      }
      if (!d && s.hessian != HessianMode::Exact) { d = newton_direction(al, x, active, gn_reg, true, kInf, gn_ws); }
      if (d) { next = projected_line_search(al, x, fx, *d, 1.0, s, non_finite); }
    }
    if (!next) {
      // projected gradient with a Barzilai-Borwein initial step
      if (x_prev.size() == x.size()) {
        const Vec sdx = x - x_prev;
        const Vec ydg = al.grad - g_prev;
        const double sy = sdx.dot(ydg);
        if (sy > 0.0) { bb_step = sdx.squaredNorm() / sy; }
      } else {
        bb_step = 1.0 / std::max(1.0, al.grad.lpNorm<Eigen::Infinity>());
      }
      next = projected_line_search(al, x, fx, -al.grad, bb_step, s, non_finite);
    }
    if (!next) { return {non_finite ? InnerOutcome::NonFinite : InnerOutcome::Stalled, it + 1}; }
    x_prev = x;
    g_prev = al.grad;
    x = std::move(*next);
  }
  return {InnerOutcome::IterationLimit, s.max_inner_iters};
}

/// Least-squares multiplier estimate over the free variables; zero when none is available.
inline Vec least_squares_multipliers(const AugmentedLagrangian & al, const Vec & x, const Vec & grad_f)
{
  const auto m = al.jac.rows();
  if (m == 0) { return Vec(); }
  const Bounds & b = al.bounds();
  SpMat jf = al.jac;
  Vec gf = grad_f;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool on_bound = x[i] <= b.lower[i] || x[i] >= b.upper[i];
    if (on_bound) { gf[i] = 0.0; }
  }
  // zero the columns of bound variables
  Vec colmask = Vec::Ones(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= b.lower[i] || x[i] >= b.upper[i]) { colmask[i] = 0.0; }
  }
  jf = jf * colmask.asDiagonal();
  SpMat jjt = (jf * jf.transpose()).pruned();
  SpMat eye(m, m);
  eye.setIdentity();
  Eigen::SimplicialLDLT<SpMat> ldlt(jjt + 1e-10 * eye);
  if (ldlt.info() != Eigen::Success) { return Vec::Zero(m); }
  Vec mu = ldlt.solve(-(jf * gf));
  if (!mu.allFinite() || mu.lpNorm<Eigen::Infinity>() > 1e8) { return Vec::Zero(m); }
  return mu;
}

}  // namespace detail

/**
 * @brief Solve NLP(theta) from x_init.
 *
 * Deterministic in its inputs apart from the wall_time field. Anything other than Converged
 * means the returned point is not a usable local minimum.
 */
inline SolveReport solve(const ParamNLP & nlp, const Vec & theta, const Vec & x_init, const SolverSettings & s = {})
{
  s.validate();
  if (static_cast<std::size_t>(x_init.size()) != nlp.n_vars || static_cast<std::size_t>(theta.size()) != nlp.param_dim) {
    throw ConfigError("solve: dimension mismatch");
  }
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  SolveReport rep;
  rep.x_star = x_init;
  const Bounds bounds = nlp.bounds(theta);
  if (!x_init.allFinite() || !theta.allFinite()) {
    rep.status = SolveStatus::NonFinite;
    rep.wall_time = elapsed();
    return rep;
  }

  detail::AugmentedLagrangian al(nlp, theta, bounds);
  Vec x = detail::project(x_init, bounds);
  al.rho = s.penalty_init;
  al.mu = Vec::Zero(static_cast<Eigen::Index>(nlp.n_eq));

  auto finish = [&](SolveStatus st) {
    rep.status = st;
    rep.x_star = x;
    rep.objective = nlp.objective(x, theta);
    rep.constraint_violation = constraint_violation(nlp, x, theta);
    rep.multipliers = al.mu;
    if (st == SolveStatus::Converged && !std::isfinite(rep.objective)) { rep.status = SolveStatus::NonFinite; }
    rep.wall_time = elapsed();
    return rep;
  };

  al.linearize(x);
  if (!al.grad.allFinite() || !al.c.allFinite() || !std::isfinite(nlp.objective(x, theta))) {
    return finish(SolveStatus::NonFinite);
  }
  const Vec grad_f = objective_gradient(nlp, x, theta);
  double prev_violation = al.c.size() > 0 ? al.c.lpNorm<Eigen::Infinity>() : 0.0;
  int frozen_outer = 0;
  // an initial point that already satisfies first-order conditions is returned unchanged
  {
    const Vec mu_ls = detail::least_squares_multipliers(al, x, grad_f);
    const Vec g_lag = grad_f + (al.c.size() > 0 ? Vec(al.jac.transpose() * mu_ls) : Vec::Zero(x.size()));
    rep.kkt_residual = detail::projected_gradient_norm(x, g_lag, bounds);
    if (prev_violation <= s.eq_tol && rep.kkt_residual <= s.kkt_tol) {
      al.mu = mu_ls;
      return finish(SolveStatus::Converged);
    }
    if (s.least_squares_multipliers) { al.mu = mu_ls; }
  }

  for (std::size_t outer = 0; outer < s.max_outer_iters; ++outer) {
    rep.outer_iters = outer + 1;
    const Vec x_outer = x;
    const auto inner = detail::minimize_subproblem(al, x, s.kkt_tol, s, start);
    rep.inner_iters_total += inner.iterations;
    if (inner.outcome == detail::InnerOutcome::NonFinite) { return finish(SolveStatus::NonFinite); }
    if (inner.outcome == detail::InnerOutcome::ViolationBlowup) {
      x = x_outer;
      if (s.trace != nullptr) { *s.trace << "outer=" << outer << " blowup penalty=" << al.rho << '\n'; }
      if (al.rho >= s.penalty_max) { return finish(SolveStatus::Diverged); }
      al.rho = std::min(al.rho * s.penalty_growth, s.penalty_max);
      continue;
    }

    const Vec c = nlp.n_eq > 0 ? nlp.constraints(x, theta) : Vec();
    if (!c.allFinite()) { return finish(SolveStatus::NonFinite); }
    const double violation = c.size() > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    if (c.size() > 0) { al.mu += al.rho * c; }

    // with the updated multipliers grad L_A(x; mu_old) is the Lagrangian gradient
    al.linearize(x);
    const Vec g_lag = al.c.size() > 0 ? Vec(al.grad - al.rho * (al.jac.transpose() * al.c)) : al.grad;
    rep.kkt_residual = detail::projected_gradient_norm(x, g_lag, bounds);

    if (s.trace != nullptr) {
      *s.trace << "outer=" << outer << " inner=" << inner.iterations << " objective=" << nlp.objective(x, theta)
               << " violation=" << violation << " kkt=" << rep.kkt_residual << " penalty=" << al.rho << '\n';
    }

    if (violation <= s.eq_tol && rep.kkt_residual <= s.kkt_tol) { return finish(SolveStatus::Converged); }
    if (inner.outcome == detail::InnerOutcome::TimeLimit) { return finish(SolveStatus::MaxIterations); }
    // an iterate that neither moves nor gets more feasible sits at a local minimum of infeasibility
    const bool frozen = (x - x_outer).lpNorm<Eigen::Infinity>() <= 1e-3 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    frozen_outer = (frozen && violation > s.eq_tol && violation > 0.9 * prev_violation) ? frozen_outer + 1 : 0;
    if (frozen_outer >= 2) { return finish(SolveStatus::Diverged); }
    if (violation > s.eq_tol && violation > 0.1 * prev_violation) {
      if (al.rho >= s.penalty_max) { return finish(SolveStatus::Diverged); }
      al.rho = std::min(al.rho * s.penalty_growth, s.penalty_max);
    }
    prev_violation = violation;
  }
  return finish(SolveStatus::MaxIterations);
}

}  // namespace pho
