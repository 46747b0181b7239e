#pragma once

/**
 * @file
 * @brief Parameterized nonlinear programs, homotopy points and parameter maps.
 *
 * A ParamNLP describes the family
 * \f[
 *   \min_x f(x, \theta) \quad \text{s.t.} \quad c(x, \theta) = 0,\; l(\theta) \le x \le u(\theta)
 * \f]
 * and a ParamMap takes a homotopy point \f$\lambda \in [0,1]^d\f$ to a parameter vector.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

namespace pho {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised for malformed problem definitions, maps and hyperparameters.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Box bounds on the decision vector for a given parameter vector.
struct Bounds
{
  Vec lower;
  Vec upper;
};

/**
 * @brief Parameterized nonlinear program.
 *
 * Only `objective`, `constraints` and `bounds` are mandatory. The derivative callbacks are used
 * when present; otherwise central finite differences are substituted (see derivatives.hpp).
 * All callbacks must be pure functions of their arguments.
 */
struct ParamNLP
{
  std::string name;
  std::size_t n_vars{0};
  std::size_t n_eq{0};
  std::size_t param_dim{0};

  std::function<double(const Vec & x, const Vec & theta)> objective;
  std::function<Vec(const Vec & x, const Vec & theta)> constraints;
  std::function<Bounds(const Vec & theta)> bounds;

  /// df/dx, dense.
  std::function<Vec(const Vec & x, const Vec & theta)> objective_gradient;
  /// dc/dx as an n_eq x n_vars sparse matrix.
  std::function<SpMat(const Vec & x, const Vec & theta)> constraint_jacobian;
  /// Hessian of f + w^T c with respect to x (either triangle or full, symmetric).
  std::function<SpMat(const Vec & x, const Vec & theta, const Vec & w)> lagrangian_hessian;
};

/// Strong type for a point of the homotopy hypercube.
class HomotopyPoint
{
public:
  HomotopyPoint() = default;

  explicit HomotopyPoint(Vec lambda) : lambda_(std::move(lambda))
  {
    for (Eigen::Index i = 0; i < lambda_.size(); ++i) {
      if (!(lambda_[i] >= 0.0 && lambda_[i] <= 1.0)) {
        throw ConfigError("homotopy point component " + std::to_string(i) + " outside [0,1]");
      }
    }
  }

  static HomotopyPoint zeros(std::size_t d) { return HomotopyPoint(Vec::Zero(static_cast<Eigen::Index>(d))); }
  static HomotopyPoint ones(std::size_t d) { return HomotopyPoint(Vec::Ones(static_cast<Eigen::Index>(d))); }
  static HomotopyPoint constant(std::size_t d, double v)
  {
    return HomotopyPoint(Vec::Constant(static_cast<Eigen::Index>(d), v));
  }

  const Vec & values() const { return lambda_; }
  std::size_t dim() const { return static_cast<std::size_t>(lambda_.size()); }
  double operator[](std::size_t i) const { return lambda_[static_cast<Eigen::Index>(i)]; }

  bool is_zero() const { return (lambda_.array() == 0.0).all(); }
  bool is_goal() const { return (lambda_.array() == 1.0).all(); }

  double distance(const HomotopyPoint & other) const { return (lambda_ - other.lambda_).norm(); }

  friend bool operator==(const HomotopyPoint & a, const HomotopyPoint & b)
  {
    return a.lambda_.size() == b.lambda_.size() && (a.lambda_.array() == b.lambda_.array()).all();
  }

private:
  Vec lambda_;
};

/**
 * @brief Componentwise linear map from homotopy points to problem parameters.
 *
 * `assignment[k]` is the homotopy component that drives parameter entry k, so every parameter
 * entry is covered exactly once.
 */
struct ParamMap
{
  Vec theta_easy;
  Vec theta_goal;
  std::vector<std::size_t> assignment;
  std::size_t homotopy_dim{1};

  /// Validate sizes and coverage; throws ConfigError.
  void validate() const
  {
    if (theta_easy.size() != theta_goal.size()) {
      throw ConfigError("parameter map: easy and goal parameter vectors differ in size");
    }
    if (assignment.size() != static_cast<std::size_t>(theta_easy.size())) {
      throw ConfigError("parameter map: assignment must cover every parameter entry exactly once");
    }
    if (homotopy_dim == 0) { throw ConfigError("parameter map: homotopy dimension must be positive"); }
    for (auto k : assignment) {
      if (k >= homotopy_dim) { throw ConfigError("parameter map: assignment refers to a missing homotopy component"); }
    }
  }

  /// All parameters driven by a single homotopy component.
  static ParamMap scalar(Vec easy, Vec goal)
  {
    ParamMap m{std::move(easy), std::move(goal), {}, 1};
    m.assignment.assign(static_cast<std::size_t>(m.theta_easy.size()), 0);
    m.validate();
    return m;
  }

  /// One homotopy component per parameter entry.
  static ParamMap per_component(Vec easy, Vec goal)
  {
    ParamMap m{std::move(easy), std::move(goal), {}, 1};
    m.homotopy_dim = static_cast<std::size_t>(m.theta_easy.size());
    m.assignment.resize(m.homotopy_dim);
    for (std::size_t k = 0; k < m.homotopy_dim; ++k) { m.assignment[k] = k; }
    m.validate();
    return m;
  }
};

/// Parameters selected by a homotopy point. Endpoints reproduce theta_easy / theta_goal exactly.
inline Vec map_params(const ParamMap & map, const HomotopyPoint & lambda)
{
  if (lambda.dim() != map.homotopy_dim) {
    throw ConfigError("homotopy point has dimension " + std::to_string(lambda.dim()) + ", map expects "
                      + std::to_string(map.homotopy_dim));
  }
  Vec theta(map.theta_easy.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double l = lambda[map.assignment[static_cast<std::size_t>(k)]];
    // written as a two-sided blend so that l == 0 and l == 1 are bit-exact
    theta[k] = (1.0 - l) * map.theta_easy[k] + l * map.theta_goal[k];
  }
  return theta;
}

struct FeasibilityTolerance
{
  double eq_tol{1e-6};
  double bound_tol{1e-8};

  void validate() const
  {
    if (!(eq_tol > 0.0) || !(bound_tol > 0.0)) { throw ConfigError("feasibility tolerances must be positive"); }
  }
};

/// Infinity norm of c(x, theta); zero when there are no constraints, +inf when non-finite.
inline double constraint_violation(const ParamNLP & nlp, const Vec & x, const Vec & theta)
{
  if (nlp.n_eq == 0) { return 0.0; }
  const Vec c = nlp.constraints(x, theta);
  if (!c.allFinite()) { return kInf; }
  return c.lpNorm<Eigen::Infinity>();
}

/// Largest amount by which x leaves its box.
inline double bound_violation(const Bounds & b, const Vec & x)
{
  double v = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    v = std::max({v, b.lower[i] - x[i], x[i] - b.upper[i]});
  }
  return v;
}

inline bool is_feasible(const ParamNLP & nlp, const Vec & x, const Vec & theta, const FeasibilityTolerance & tol = {})
{
  if (static_cast<std::size_t>(x.size()) != nlp.n_vars || static_cast<std::size_t>(theta.size()) != nlp.param_dim) {
    throw ConfigError("is_feasible: dimension mismatch");
  }
  if (!x.allFinite()) { return false; }
  if (bound_violation(nlp.bounds(theta), x) > tol.bound_tol) { return false; }
  return constraint_violation(nlp, x, theta) <= tol.eq_tol;
}

/// Objective value that is explicit about non-finite results instead of clamping them.
struct ObjectiveValue
{
  double value{0.0};
  bool finite() const { return std::isfinite(value); }
};

inline ObjectiveValue objective_value(const ParamNLP & nlp, const Vec & x, const Vec & theta)
{
  if (static_cast<std::size_t>(x.size()) != nlp.n_vars) { throw ConfigError("objective_value: dimension mismatch"); }
  return ObjectiveValue{nlp.objective(x, theta)};
}

}  // namespace pho
