#pragma once

/**
 * @file
 * @brief Derivative access for ParamNLP with central finite-difference fallbacks, and a
 * gradient checker comparing analytic callbacks against those differences.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include "nlp.hpp"

namespace pho {

/// Step used for the central difference in coordinate i.
inline double fd_step(double xi) { return 1e-6 * (1.0 + std::abs(xi)); }

inline Vec fd_gradient(const std::function<double(const Vec &)> & f, const Vec & x)
{
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Dense central-difference Jacobian of a vector function.
inline Eigen::MatrixXd fd_jacobian(const std::function<Vec(const Vec &)> & c, const Vec & x, Eigen::Index m)
{
  Eigen::MatrixXd J(m, x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i]);
    xp[i] = x[i] + h;
    const Vec cp = c(xp);
    xp[i] = x[i] - h;
    const Vec cm = c(xp);
    xp[i] = x[i];
    J.col(i) = (cp - cm) / (2.0 * h);
  }
  return J;
}

inline Vec objective_gradient(const ParamNLP & nlp, const Vec & x, const Vec & theta)
{
  if (nlp.objective_gradient) { return nlp.objective_gradient(x, theta); }
  return fd_gradient([&](const Vec & z) { return nlp.objective(z, theta); }, x);
}

inline SpMat constraint_jacobian(const ParamNLP & nlp, const Vec & x, const Vec & theta)
{
  const auto m = static_cast<Eigen::Index>(nlp.n_eq);
  if (m == 0) { return SpMat(0, x.size()); }
  if (nlp.constraint_jacobian) { return nlp.constraint_jacobian(x, theta); }
  const Eigen::MatrixXd J = fd_jacobian([&](const Vec & z) { return nlp.constraints(z, theta); }, x, m);
  return J.sparseView();
}

/// Gradient of f + w^T c.
inline Vec lagrangian_gradient(const ParamNLP & nlp, const Vec & x, const Vec & theta, const Vec & w)
{
  Vec g = objective_gradient(nlp, x, theta);
  if (nlp.n_eq > 0) { g += constraint_jacobian(nlp, x, theta).transpose() * w; }
  return g;
}

/// Hessian of f + w^T c, full symmetric storage.
inline SpMat lagrangian_hessian(const ParamNLP & nlp, const Vec & x, const Vec & theta, const Vec & w)
{
  if (nlp.lagrangian_hessian) { return nlp.lagrangian_hessian(x, theta, w); }
  const Eigen::MatrixXd H = fd_jacobian(
    [&](const Vec & z) { return lagrangian_gradient(nlp, z, theta, w); }, x, x.size());
  const Eigen::MatrixXd Hs = 0.5 * (H + H.transpose());
  return Hs.sparseView();
}

struct GradientCheckEntry
{
  enum class Kind { Objective, Constraint } kind;
  Eigen::Index row;  ///< constraint index (0 for the objective)
  Eigen::Index col;  ///< variable index
  double analytic;
  double numeric;
  double rel_error;
};

struct GradientCheckReport
{
  double max_rel_error_objective{0.0};
  double max_rel_error_constraints{0.0};
  std::vector<GradientCheckEntry> flagged;

  bool ok() const { return flagged.empty(); }
  double max_rel_error() const { return std::max(max_rel_error_objective, max_rel_error_constraints); }
};

/**
 * @brief Compare the analytic objective gradient and constraint Jacobian against central differences.
 *
 * The relative error of an entry is |a - n| / max(1, |a|, |n|). Entries above rel_tol are flagged.
 * Callbacks that are absent are skipped.
 */
inline GradientCheckReport check_gradients(const ParamNLP & nlp, const Vec & theta, const Vec & x, double rel_tol)
{
  GradientCheckReport rep;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}); };

  if (nlp.objective_gradient) {
    const Vec ga = nlp.objective_gradient(x, theta);
    const Vec gn = fd_gradient([&](const Vec & z) { return nlp.objective(z, theta); }, x);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double e = rel(ga[i], gn[i]);
      rep.max_rel_error_objective = std::max(rep.max_rel_error_objective, e);
      if (e > rel_tol) { rep.flagged.push_back({GradientCheckEntry::Kind::Objective, 0, i, ga[i], gn[i], e}); }
    }
  }
  if (nlp.constraint_jacobian && nlp.n_eq > 0) {
    const Eigen::MatrixXd Ja = Eigen::MatrixXd(nlp.constraint_jacobian(x, theta));
    const Eigen::MatrixXd Jn = fd_jacobian(
      [&](const Vec & z) { return nlp.constraints(z, theta); }, x, static_cast<Eigen::Index>(nlp.n_eq));
    for (Eigen::Index j = 0; j < Ja.cols(); ++j) {
      for (Eigen::Index i = 0; i < Ja.rows(); ++i) {
        const double e = rel(Ja(i, j), Jn(i, j));
        rep.max_rel_error_constraints = std::max(rep.max_rel_error_constraints, e);
        if (e > rel_tol) {
          rep.flagged.push_back({GradientCheckEntry::Kind::Constraint, i, j, Ja(i, j), Jn(i, j), e});
        }
      }
    }
  }
  return rep;
}

}  // namespace pho
