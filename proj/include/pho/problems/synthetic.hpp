#pragma once

/**
 * @file
 * @brief One-variable problem families whose solution sets show typical homotopy pitfalls,
 * together with a brute-force oracle for their local minima.
 *
 * Every family has d = 1 and theta = [t] with t = lambda. The easy problem is t = 0, the goal
 * problem t = 1. The objective has the form f(x, t) on a box l(t) <= x <= u(t).
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "../nlp.hpp"

namespace pho::synthetic {

enum class Kind { Bifurcation, DoubleWell, AsymmetricDoubleWell, Fold, Disconnected, AbbreviatedPath };

inline std::string_view to_string(Kind k)
{
  switch (k) {
    case Kind::Bifurcation: return "bifurcation";
    case Kind::DoubleWell: return "double_well";
    case Kind::AsymmetricDoubleWell: return "asymmetric_double_well";
    case Kind::Fold: return "fold";
    case Kind::Disconnected: return "disconnected";
    case Kind::AbbreviatedPath: return "abbreviated_path";
  }
  return "unknown";
}

inline Kind kind_from_string(std::string_view s)
{
  for (auto k : {Kind::Bifurcation, Kind::DoubleWell, Kind::AsymmetricDoubleWell, Kind::Fold, Kind::Disconnected,
                 Kind::AbbreviatedPath}) {
    if (to_string(k) == s) { return k; }
  }
  throw ConfigError("unknown synthetic problem kind '" + std::string(s) + "'");
}

/// Scalar family f(x, t) with first and second x-derivatives and t-dependent bounds.
struct ScalarFamily
{
  std::function<double(double, double)> f;
  std::function<double(double, double)> df;
  std::function<double(double, double)> d2f;
  std::function<double(double)> lower;
  std::function<double(double)> upper;
};

struct LocalMinimum
{
  double x;
  double objective;
};

/**
 * @brief All local minima of f(., t) on [l(t), u(t)].
 *
 * Scans a uniform grid for discrete minima (including the end points), then polishes interior
 * ones with safeguarded Newton steps. Minima closer than 1e-6 are merged.
 */
inline std::vector<LocalMinimum> enumerate_minima(const ScalarFamily & fam, double t, std::size_t grid = 20001)
{
  const double lo = fam.lower(t);
  const double hi = fam.upper(t);
  std::vector<double> xs(grid);
  std::vector<double> fs(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    fs[i] = fam.f(xs[i], t);
  }
  const double h = (hi - lo) / static_cast<double>(grid - 1);
  std::vector<LocalMinimum> out;
  auto push = [&](double x) {
    for (const auto & m : out) {
      if (std::abs(m.x - x) <= 1e-6) { return; }
    }
    out.push_back({x, fam.f(x, t)});
  };
  for (std::size_t i = 0; i < grid; ++i) {
    const bool left_ok = i == 0 || fs[i] <= fs[i - 1];
    const bool right_ok = i + 1 == grid || fs[i] < fs[i + 1];
    if (!(left_ok && right_ok)) { continue; }
    if (i == 0 && fam.df(lo, t) >= 0.0) {
      push(lo);
      continue;
    }
    if (i + 1 == grid && fam.df(hi, t) <= 0.0) {
      push(hi);
      continue;
    }
    // polish within the bracket [x_{i-1}, x_{i+1}]
    double a = xs[i > 0 ? i - 1 : i];
    double b = xs[i + 1 < grid ? i + 1 : i];
    double x = xs[i];
    for (int k = 0; k < 100; ++k) {
      const double g = fam.df(x, t);
      if (g > 0.0) {
        b = x;
      } else {
        a = x;
      }
      const double H = fam.d2f(x, t);
      double xn = H > 0.0 ? x - g / H : 0.5 * (a + b);
      if (!(xn > a && xn < b)) { xn = 0.5 * (a + b); }
      if (std::abs(xn - x) < 1e-15 * std::max(1.0, std::abs(x))) {
        x = xn;
        break;
      }
      x = xn;
      if (b - a < 1e-14) { break; }
    }
    if (std::abs(x - xs[i]) <= 2.0 * h) { push(x); }
  }
  std::sort(out.begin(), out.end(), [](const LocalMinimum & p, const LocalMinimum & q) { return p.x < q.x; });
  return out;
}

struct SyntheticProblem
{
  Kind kind;
  ScalarFamily family;
  ParamNLP nlp;
  ParamMap map;
  /// Initial guess for the easy problem.
  Vec x0;

  std::vector<LocalMinimum> oracle(double t) const { return enumerate_minima(family, t); }
  std::vector<LocalMinimum> goal_minima() const { return oracle(1.0); }
};

inline ParamNLP family_nlp(const ScalarFamily & fam, std::string name)
{
  ParamNLP nlp;
  nlp.name = std::move(name);
  nlp.n_vars = 1;
  nlp.n_eq = 0;
  nlp.param_dim = 1;
  nlp.objective = [fam](const Vec & x, const Vec & th) { return fam.f(x[0], th[0]); };
  nlp.constraints = [](const Vec &, const Vec &) { return Vec(); };
  nlp.bounds = [fam](const Vec & th) {
    return Bounds{Vec::Constant(1, fam.lower(th[0])), Vec::Constant(1, fam.upper(th[0]))};
  };
  nlp.objective_gradient = [fam](const Vec & x, const Vec & th) { return Vec::Constant(1, fam.df(x[0], th[0])); };
  nlp.lagrangian_hessian = [fam](const Vec & x, const Vec & th, const Vec &) {
    SpMat H(1, 1);
    H.insert(0, 0) = fam.d2f(x[0], th[0]);
    return H;
  };
  return nlp;
}

/// Tilted quartic well (x^2 - s)^2 + a x with s and a functions of t.
inline ScalarFamily tilted_quartic(std::function<double(double)> s, std::function<double(double)> a, double box)
{
  ScalarFamily fam;
  fam.f = [s, a](double x, double t) {
    const double q = x * x - s(t);
    return q * q + a(t) * x;
  };
  fam.df = [s, a](double x, double t) { return 4.0 * x * (x * x - s(t)) + a(t); };
  fam.d2f = [s](double x, double t) { return 12.0 * x * x - 4.0 * s(t); };
  fam.lower = [box](double) { return -box; };
  fam.upper = [box](double) { return box; };
  return fam;
}

/**
 * Builds a family.
 *
 * - Bifurcation: s(t) = t - 1/2 with a tilt 0.5 cos(3 pi t)(1 - t) that vanishes at t = 1, so
 *   the goal minima are exactly +-sqrt(1/2). The tilt keeps the easy minimum off the symmetry
 *   axis (an untilted start at x = 0 would be a stationary saddle of the goal problem) and makes
 *   points on the single branch for t < 1/2 lean to either side depending on t.
 * - DoubleWell: (x^2 - 1)^2 for every t.
 * - AsymmetricDoubleWell: (x^2 - 1)^2 + a(t) x with a(t) = 0.3(2t - 1) + 2 sin^2(pi t). The
 *   positive well is best at t = 0, disappears around t = 1/2 and returns as the worse goal
 *   minimum.
 * - Fold: a(t) = 3t - 1; the positive branch ends near t = 0.85.
 * - Disconnected: a(t) = 2.5 sin(pi t); the positive branch exists near both ends only.
 * - AbbreviatedPath: x^2/2 - h(t) exp(-(x - 1.5)^2 / 0.05) with h(t) = 1.2(1 - t); the side
 *   well near x = 1.5 fades out before the goal.
 */
inline SyntheticProblem make_synthetic(Kind kind)
{
  constexpr double pi = std::numbers::pi;
  ScalarFamily fam;
  double x0 = 0.0;
  switch (kind) {
    case Kind::Bifurcation:
      fam = tilted_quartic([](double t) { return t - 0.5; }, [](double t) { return 0.5 * std::cos(3.0 * pi * t) * (1.0 - t); }, 2.0);
      x0 = 0.0;
      break;
    case Kind::DoubleWell:
      fam = tilted_quartic([](double) { return 1.0; }, [](double) { return 0.0; }, 2.0);
      x0 = 0.5;
      break;
    case Kind::AsymmetricDoubleWell:
      fam = tilted_quartic(
        [](double) { return 1.0; },
        [](double t) {
          const double sn = std::sin(pi * t);
          return 0.3 * (2.0 * t - 1.0) + 2.0 * sn * sn;
        },
        2.0);
      x0 = 1.0;
      break;
    case Kind::Fold:
      fam = tilted_quartic([](double) { return 1.0; }, [](double t) { return 3.0 * t - 1.0; }, 2.0);
      x0 = 1.2;
      break;
    case Kind::Disconnected:
      fam = tilted_quartic([](double) { return 1.0; }, [](double t) { return 2.5 * std::sin(pi * t); }, 2.0);
      x0 = 1.0;
      break;
    case Kind::AbbreviatedPath: {
      auto h = [](double t) { return 1.2 * (1.0 - t); };
      fam.f = [h](double x, double t) {
        const double u = x - 1.5;
        return 0.5 * x * x - h(t) * std::exp(-u * u / 0.05);
      };
      fam.df = [h](double x, double t) {
        const double u = x - 1.5;
        return x + h(t) * (2.0 * u / 0.05) * std::exp(-u * u / 0.05);
      };
      fam.d2f = [h](double x, double t) {
        const double u = x - 1.5;
        return 1.0 + h(t) * (2.0 / 0.05 - 4.0 * u * u / (0.05 * 0.05)) * std::exp(-u * u / 0.05);
      };
      fam.lower = [](double) { return -3.0; };
      fam.upper = [](double) { return 3.0; };
      x0 = 1.5;
      break;
    }
  }
  SyntheticProblem p{kind, fam, family_nlp(fam, std::string(to_string(kind))),
                     ParamMap::scalar(Vec::Zero(1), Vec::Ones(1)), Vec::Constant(1, x0)};
  return p;
}

}  // namespace pho::synthetic
