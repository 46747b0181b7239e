#pragma once

/**
 * @file
 * @brief Cart-pole swing-up as a trapezoidal-collocation NLP.
 *
 * State s = [x, xdot, phi, phidot] with phi = 0 hanging down and phi = pi upright. The pole is a
 * point mass m_pole at distance l_pole from a frictionless pivot on a cart of mass m_cart.
 *
 * Decision vector (interleaved per knot k = 0..N-1): z_k = [x, xdot, phi, phidot, F].
 * Constraints: 4(N-1) trapezoidal defects, then s_0 = 0 and s_{N-1} = [0, 0, pi, 0].
 * Bounds: |x| <= x_max, |F| <= F_max. Objective: dt * sum F_k^2.
 */

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "../nlp.hpp"

namespace pho::cartpole {

/// Parameter vector layout used by the cart-pole family.
enum ParamIndex : Eigen::Index { kMassCart = 0, kMassPole = 1, kForceMax = 2, kPoleLength = 3, kTrackLimit = 4 };
inline constexpr std::size_t kParamDim = 5;
inline constexpr int kStateDim = 4;
inline constexpr int kKnotDim = 5;

struct Params
{
  double m_cart{20.0};
  double m_pole{1.0};
  double F_max{200.0};
  double l_pole{0.6};
  double x_max{1.6};

  Vec to_vector() const
  {
    Vec v(5);
    v << m_cart, m_pole, F_max, l_pole, x_max;
    return v;
  }

  static Params from_vector(const Vec & v)
  {
    if (v.size() != 5) { throw ConfigError("cart-pole parameters need 5 entries"); }
    return {v[kMassCart], v[kMassPole], v[kForceMax], v[kPoleLength], v[kTrackLimit]};
  }

  void validate() const
  {
    if (!(m_cart > 0 && m_pole > 0 && F_max > 0 && l_pole > 0 && x_max > 0)) {
      throw ConfigError("cart-pole parameters must be strictly positive");
    }
  }
};

/// Easy endpoint of the swing-up homotopy.
inline Params easy_params() { return {20.0, 1.0, 200.0, 0.6, 1.6}; }

struct TranscriptionSettings
{
  double horizon{5.0};
  int knots{101};
  double gravity{9.81};

  void validate() const
  {
    if (knots < 2) { throw ConfigError("transcription needs at least 2 knots"); }
    if (!(horizon > 0.0)) { throw ConfigError("transcription horizon must be positive"); }
  }
  double dt() const { return horizon / (knots - 1); }
};

using State = Eigen::Matrix<double, 4, 1>;
using DynJac = Eigen::Matrix<double, 4, 5>;

/// State derivative [xdot, xddot, phidot, phiddot].
inline State dynamics(const State & s, double force, const Params & p, double g = 9.81)
{
  const double sn = std::sin(s[2]);
  const double cs = std::cos(s[2]);
  const double w = s[3];
  const double den = p.m_cart + p.m_pole * sn * sn;
  State ds;
  ds[0] = s[1];
  ds[1] = (force + p.m_pole * sn * (p.l_pole * w * w + g * cs)) / den;
  ds[2] = w;
  ds[3] = -(force * cs + p.m_pole * p.l_pole * w * w * cs * sn + (p.m_cart + p.m_pole) * g * sn) / (p.l_pole * den);
  return ds;
}

/// Jacobian of dynamics() with respect to [x, xdot, phi, phidot, F].
inline DynJac dynamics_jacobian(const State & s, double force, const Params & p, double g = 9.81)
{
  const double sn = std::sin(s[2]);
  const double cs = std::cos(s[2]);
  const double w = s[3];
  const double mp = p.m_pole;
  const double l = p.l_pole;
  const double den = p.m_cart + mp * sn * sn;
  const double dden = 2.0 * mp * sn * cs;

  const double a = force + mp * sn * (l * w * w + g * cs);
  const double da_dphi = mp * (cs * l * w * w + g * (cs * cs - sn * sn));
  const double da_dw = 2.0 * mp * sn * l * w;

  const double b = force * cs + mp * l * w * w * cs * sn + (p.m_cart + mp) * g * sn;
  const double db_dphi = -force * sn + mp * l * w * w * (cs * cs - sn * sn) + (p.m_cart + mp) * g * cs;
  const double db_dw = 2.0 * mp * l * w * cs * sn;

  DynJac J = DynJac::Zero();
  J(0, 1) = 1.0;
  J(1, 2) = (da_dphi * den - a * dden) / (den * den);
  J(1, 3) = da_dw / den;
  J(1, 4) = 1.0 / den;
  J(2, 3) = 1.0;
  J(3, 2) = -(db_dphi * den - b * dden) / (l * den * den);
  J(3, 3) = -db_dw / (l * den);
  J(3, 4) = -cs / (l * den);
  return J;
}

/// Total mechanical energy (kinetic + potential, zero potential at the pivot height).
inline double energy(const State & s, const Params & p, double g = 9.81)
{
  const double cs = std::cos(s[2]);
  const double kinetic = 0.5 * (p.m_cart + p.m_pole) * s[1] * s[1] + p.m_pole * p.l_pole * s[1] * s[3] * cs
                         + 0.5 * p.m_pole * p.l_pole * p.l_pole * s[3] * s[3];
  return kinetic - p.m_pole * g * p.l_pole * cs;
}

inline State goal_state() { return State(0.0, 0.0, std::numbers::pi, 0.0); }

namespace detail {

inline State knot_state(const Vec & z, int k) { return z.segment<4>(kKnotDim * k); }
inline double knot_force(const Vec & z, int k) { return z[kKnotDim * k + 4]; }

}  // namespace detail

/// Build the swing-up NLP over theta = [m_cart, m_pole, F_max, l_pole, x_max].
inline ParamNLP build_nlp(const TranscriptionSettings & ts = {})
{
  ts.validate();
  const int N = ts.knots;
  const double h = ts.dt();
  const double g = ts.gravity;

  ParamNLP nlp;
  nlp.name = "cartpole";
  nlp.n_vars = static_cast<std::size_t>(kKnotDim * N);
  nlp.n_eq = static_cast<std::size_t>(kStateDim * (N - 1) + 8);
  nlp.param_dim = kParamDim;

  nlp.objective = [N, h](const Vec & z, const Vec &) {
    double sum = 0.0;
    for (int k = 0; k < N; ++k) { sum += detail::knot_force(z, k) * detail::knot_force(z, k); }
    return h * sum;
  };
  nlp.objective_gradient = [N, h](const Vec & z, const Vec &) {
    Vec grad = Vec::Zero(z.size());
    for (int k = 0; k < N; ++k) { grad[kKnotDim * k + 4] = 2.0 * h * detail::knot_force(z, k); }
    return grad;
  };

  nlp.constraints = [N, h, g](const Vec & z, const Vec & theta) {
    const Params p = Params::from_vector(theta);
    Vec c(kStateDim * (N - 1) + 8);
    State f_prev = dynamics(detail::knot_state(z, 0), detail::knot_force(z, 0), p, g);
    for (int k = 0; k + 1 < N; ++k) {
      const State f_next = dynamics(detail::knot_state(z, k + 1), detail::knot_force(z, k + 1), p, g);
      c.segment<4>(4 * k) = detail::knot_state(z, k + 1) - detail::knot_state(z, k) - 0.5 * h * (f_prev + f_next);
      f_prev = f_next;
    }
    const int off = 4 * (N - 1);
    c.segment<4>(off) = detail::knot_state(z, 0);
    c.segment<4>(off + 4) = detail::knot_state(z, N - 1) - goal_state();
    return c;
  };

  nlp.constraint_jacobian = [N, h, g](const Vec & z, const Vec & theta) {
    const Params p = Params::from_vector(theta);
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(N) * 60);
    DynJac J_prev = dynamics_jacobian(detail::knot_state(z, 0), detail::knot_force(z, 0), p, g);
    for (int k = 0; k + 1 < N; ++k) {
      const DynJac J_next = dynamics_jacobian(detail::knot_state(z, k + 1), detail::knot_force(z, k + 1), p, g);
      for (int r = 0; r < 4; ++r) {
        for (int col = 0; col < kKnotDim; ++col) {
          double left = -0.5 * h * J_prev(r, col);
          double right = -0.5 * h * J_next(r, col);
          if (col == r) {
            left -= 1.0;
            right += 1.0;
          }
          if (left != 0.0) { trip.emplace_back(4 * k + r, kKnotDim * k + col, left); }
          if (right != 0.0) { trip.emplace_back(4 * k + r, kKnotDim * (k + 1) + col, right); }
        }
      }
      J_prev = J_next;
    }
    const int off = 4 * (N - 1);
    for (int r = 0; r < 4; ++r) {
      trip.emplace_back(off + r, r, 1.0);
      trip.emplace_back(off + 4 + r, kKnotDim * (N - 1) + r, 1.0);
    }
    SpMat J(kStateDim * (N - 1) + 8, kKnotDim * N);
    J.setFromTriplets(trip.begin(), trip.end());
    return J;
  };

  // Objective curvature is 2h on every force. Constraint curvature comes only from the
  // dynamics terms -h/2 f(z_k) of the two defects touching knot k; it is obtained by central
  // differences of the analytic dynamics Jacobian in (phi, phidot, F), the only nonlinear inputs.
  nlp.lagrangian_hessian = [N, h, g](const Vec & z, const Vec & theta, const Vec & w) {
    const Params p = Params::from_vector(theta);
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(N) * 10);
    constexpr std::array<int, 3> nonlinear{2, 3, 4};
    for (int k = 0; k < N; ++k) {
      trip.emplace_back(kKnotDim * k + 4, kKnotDim * k + 4, 2.0 * h);
      Eigen::Vector4d v = Eigen::Vector4d::Zero();
      if (k + 1 < N) { v += w.segment<4>(4 * k); }
      if (k > 0) { v += w.segment<4>(4 * (k - 1)); }
      v *= -0.5 * h;
      if (v.isZero(0.0)) { continue; }
      Eigen::Matrix<double, 5, 1> zk = z.segment<5>(kKnotDim * k);
      Eigen::Matrix3d block;
      for (int a = 0; a < 3; ++a) {
        const int i = nonlinear[static_cast<std::size_t>(a)];
        const double step = 1e-6 * (1.0 + std::abs(zk[i]));
        Eigen::Matrix<double, 5, 1> zp = zk;
        Eigen::Matrix<double, 5, 1> zm = zk;
        zp[i] += step;
        zm[i] -= step;
        const DynJac Jp = dynamics_jacobian(zp.head<4>(), zp[4], p, g);
        const DynJac Jm = dynamics_jacobian(zm.head<4>(), zm[4], p, g);
        const Eigen::Matrix<double, 5, 1> col = (Jp - Jm).transpose() * v / (2.0 * step);
        for (int b2 = 0; b2 < 3; ++b2) { block(b2, a) = col[nonlinear[static_cast<std::size_t>(b2)]]; }
      }
      block = 0.5 * (block + block.transpose()).eval();
      for (int a = 0; a < 3; ++a) {
        for (int b2 = 0; b2 < 3; ++b2) {
          trip.emplace_back(
            kKnotDim * k + nonlinear[static_cast<std::size_t>(a)], kKnotDim * k + nonlinear[static_cast<std::size_t>(b2)],
            block(a, b2));
        }
      }
    }
    SpMat H(kKnotDim * N, kKnotDim * N);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
  };

  nlp.bounds = [N](const Vec & theta) {
    const Params p = Params::from_vector(theta);
    Bounds b{Vec::Constant(kKnotDim * N, -kInf), Vec::Constant(kKnotDim * N, kInf)};
    for (int k = 0; k < N; ++k) {
      b.lower[kKnotDim * k] = -p.x_max;
      b.upper[kKnotDim * k] = p.x_max;
      b.lower[kKnotDim * k + 4] = -p.F_max;
      b.upper[kKnotDim * k + 4] = p.F_max;
    }
    return b;
  };
  return nlp;
}

/// One row of an exported trajectory.
struct TrajectorySample
{
  double t;
  State s;
  double force;
};

inline std::vector<TrajectorySample> unpack(const Vec & z, const TranscriptionSettings & ts = {})
{
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(ts.knots));
  for (int k = 0; k < ts.knots; ++k) {
    out.push_back({k * ts.dt(), detail::knot_state(z, k), detail::knot_force(z, k)});
  }
  return out;
}

/// CSV with header `t,x,xdot,phi,phidot,F`.
inline void write_trajectory_csv(std::ostream & os, const Vec & z, const TranscriptionSettings & ts = {})
{
  os << "t,x,xdot,phi,phidot,F\n";
  os.precision(17);
  for (const auto & row : unpack(z, ts)) {
    os << row.t << ',' << row.s[0] << ',' << row.s[1] << ',' << row.s[2] << ',' << row.s[3] << ',' << row.force
       << '\n';
  }
}

/**
 * @brief Number of swings: sign changes of phidot before the pole settles upright.
 *
 * The settling point is the first knot after which phi stays within pi/4 of the upright angle.
 * Rates below 1% of the peak rate are treated as zero so that numerical chatter is not counted.
 */
inline int swing_count(const Vec & z, const TranscriptionSettings & ts = {})
{
  const int N = ts.knots;
  int settle = N - 1;
  while (settle > 0 && std::abs(z[kKnotDim * (settle - 1) + 2] - std::numbers::pi) <= std::numbers::pi / 4) {
    --settle;
  }
  double peak = 0.0;
  for (int k = 0; k < N; ++k) { peak = std::max(peak, std::abs(z[kKnotDim * k + 3])); }
  const double thresh = 0.01 * peak;
  int count = 0;
  int last_sign = 0;
  for (int k = 0; k <= settle; ++k) {
    const double w = z[kKnotDim * k + 3];
    if (std::abs(w) <= thresh) { continue; }
    const int sign = w > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) { ++count; }
    last_sign = sign;
  }
  return count;
}

/**
 * @brief Forward-simulate the dynamics with RK4 under the piecewise-linear force of a solution.
 *
 * `substeps` RK4 steps are taken per collocation interval. Returns the terminal state.
 */
inline State simulate(const Vec & z, const Params & p, const TranscriptionSettings & ts, int substeps = 50)
{
  const int N = ts.knots;
  const double h = ts.dt() / substeps;
  State s = detail::knot_state(z, 0);
  for (int k = 0; k + 1 < N; ++k) {
    const double f0 = detail::knot_force(z, k);
    const double f1 = detail::knot_force(z, k + 1);
    for (int j = 0; j < substeps; ++j) {
      auto force_at = [&](double frac) { return f0 + (f1 - f0) * frac; };
      const double a = static_cast<double>(j) / substeps;
      const double m = (j + 0.5) / substeps;
      const double e = static_cast<double>(j + 1) / substeps;
      const State k1 = dynamics(s, force_at(a), p, ts.gravity);
      const State k2 = dynamics(s + 0.5 * h * k1, force_at(m), p, ts.gravity);
      const State k3 = dynamics(s + 0.5 * h * k2, force_at(m), p, ts.gravity);
      const State k4 = dynamics(s + h * k3, force_at(e), p, ts.gravity);
      s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return s;
}

}  // namespace pho::cartpole
