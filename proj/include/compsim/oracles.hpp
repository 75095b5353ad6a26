#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "compsim/matrix.hpp"

namespace compsim::oracles {

/// Closed-form reference solutions for one-pool systems and
/// feedback-free two-pool cascades, evaluated by adaptive quadrature.
/// These exist to check the general machinery, not to be fast.

using TimeFunction = std::function<double(double)>;

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance
/// tol. Raises QuadratureError when the recursion depth is exhausted.
double integrate_adaptive(const TimeFunction& f, double a, double b, double tol = 1e-10);

/// Variation-of-constants solution of x' = b(t) x + s(t), x(t0) = x0:
///   x(t) = exp(I(t0, t)) x0 + integral_{t0}^{t} exp(I(u, t)) s(u) du,
/// with I(u, t) = integral_u^t b(v) dv.
double scalar_solution(const TimeFunction& b, const TimeFunction& s, double t0,
                       double x0, double t, double tol = 1e-10);

/// Cascade x1' = b11 x1, x2' = b21 x1 + b22 x2 + s2 solved as two nested
/// scalar problems.
std::array<double, 2> cascade_solution(const TimeFunction& b11, const TimeFunction& b21,
                                       const TimeFunction& b22, const TimeFunction& s2,
                                       double t0, const std::array<double, 2>& x0,
                                       double t, double tol = 1e-10);

/// Age density values on an (age, time) product grid, stored one row of
/// ages per time.
struct AgeDensityGrid {
  std::vector<double> ages;   // strictly increasing, nonnegative
  std::vector<double> times;
  std::vector<Vector> values;  // values[k][a] = p(ages[a], times[k]) >= 0
};

/// One-pool age density at time t by the method of characteristics with
/// initial data at time 0:
///   p(a, t) = s(t - a) exp(integral_{t-a}^{t} b)   for a < t,
///   p(a, t) = p0(a - t) exp(integral_0^t b)        for a >= t.
/// The density can jump at a = t when p0(0) != s(0); place grid points
/// on both sides of that age when integrating across it.
AgeDensityGrid age_density_1d(const TimeFunction& b, const TimeFunction& s,
                              const TimeFunction& p0, double t,
                              const std::vector<double>& age_grid);

/// Trapezoid moments of the density at time t: returns (mass, mean age).
/// Raises ZeroMassError when the mass is not positive.
std::pair<double, double> density_moments(const AgeDensityGrid& grid, double t);

}  // namespace compsim::oracles
