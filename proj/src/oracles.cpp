#include "compsim/oracles.hpp"

#include <cmath>
#include <limits>

#include "compsim/errors.hpp"

namespace compsim::oracles {

namespace {

constexpr int kMaxDepth = 48;
constexpr int kInitialPanels = 8;

double simpson(double a, double fa, double fm, double fb, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const TimeFunction& f, double a, double fa, double m, double fm, double b,
             double fb, double whole, double tol, int depth) {
  if (depth <= 0) throw QuadratureError("adaptive quadrature did not converge");
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(a, fa, flm, fm, m);
  const double right = simpson(m, fm, frm, fb, b);
  const double delta = left + right - whole;
  if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const TimeFunction& f, double a, double b, double tol) {
  if (!f) throw ArgumentError("integrate_adaptive: empty integrand");
  if (!(tol > 0.0)) throw ArgumentError("integrate_adaptive: tolerance must be positive");
  if (a == b) return 0.0;
  if (a > b) return -integrate_adaptive(f, b, a, tol);

  // A few fixed panels first so periodic structure cannot fool the
  // whole-interval error estimate.
  const double h = (b - a) / kInitialPanels;
  double acc = 0.0;
  for (int p = 0; p < kInitialPanels; ++p) {
    const double pa = a + p * h;
    const double pb = (p == kInitialPanels - 1) ? b : pa + h;
    const double pm = 0.5 * (pa + pb);
    const double fa = f(pa);
    const double fm = f(pm);
    const double fb = f(pb);
    acc += adapt(f, pa, fa, pm, fm, pb, fb, simpson(pa, fa, fm, fb, pb),
                 tol / kInitialPanels, kMaxDepth);
  }
  return acc;
}

double scalar_solution(const TimeFunction& b, const TimeFunction& s, double t0, double x0,
                       double t, double tol) {
  if (!b || !s) throw ArgumentError("scalar_solution: empty coefficient function");
  const double inner_tol = std::min(tol * 0.1, 1e-12);
  // I(u) = integral over [t0, u] of b; the propagator from u to t is
  // exp(I(t) - I(u)).
  const double i_total = integrate_adaptive(b, t0, t, inner_tol);
  const double homogeneous = std::exp(i_total) * x0;
  if (t == t0) return x0;

  TimeFunction integrand = [&](double u) {
    const double i_u = integrate_adaptive(b, t0, u, inner_tol);
    return std::exp(i_total - i_u) * s(u);
  };
  return homogeneous + integrate_adaptive(integrand, t0, t, tol);
}

std::array<double, 2> cascade_solution(const TimeFunction& b11, const TimeFunction& b21,
                                       const TimeFunction& b22, const TimeFunction& s2,
                                       double t0, const std::array<double, 2>& x0, double t,
                                       double tol) {
  if (!b11 || !b21 || !b22 || !s2)
    throw ArgumentError("cascade_solution: empty coefficient function");
  const double inner_tol = std::min(tol * 0.1, 1e-12);

  TimeFunction x1 = [&](double u) {
    return x0[0] * std::exp(integrate_adaptive(b11, t0, u, inner_tol));
  };
  TimeFunction inflow = [&](double u) { return b21(u) * x1(u) + s2(u); };
  const double top = x1(t);
  const double bottom = scalar_solution(b22, inflow, t0, x0[1], t, tol);
  return {top, bottom};
}

AgeDensityGrid age_density_1d(const TimeFunction& b, const TimeFunction& s,
                              const TimeFunction& p0, double t,
                              const std::vector<double>& age_grid) {
  if (!b || !s || !p0) throw ArgumentError("age_density_1d: empty coefficient function");
  if (!(t >= 0.0)) throw ArgumentError("age_density_1d: time must be at or after the initial time 0");
  if (age_grid.empty()) throw ArgumentError("age_density_1d: empty age grid");
  for (std::size_t k = 0; k < age_grid.size(); ++k) {
    if (age_grid[k] < 0.0) throw ArgumentError("age_density_1d: ages must be nonnegative");
    if (k > 0 && !(age_grid[k] > age_grid[k - 1]))
      throw ArgumentError("age_density_1d: age grid must be strictly increasing");
  }

  constexpr double kTol = 1e-12;
  // Shared by every age at or above t: survival of the initial cohort.
  const double initial_decay = std::exp(integrate_adaptive(b, 0.0, t, kTol));

  AgeDensityGrid grid;
  grid.ages = age_grid;
  grid.times = {t};
  Vector row(age_grid.size());
  for (std::size_t k = 0; k < age_grid.size(); ++k) {
    const double a = age_grid[k];
    if (a < t) {
      row[k] = s(t - a) * std::exp(integrate_adaptive(b, t - a, t, kTol));
    } else {
      row[k] = p0(a - t) * initial_decay;
    }
  }
  grid.values.push_back(std::move(row));
  return grid;
}

std::pair<double, double> density_moments(const AgeDensityGrid& grid, double t) {
  std::size_t k = grid.times.size();
  for (std::size_t i = 0; i < grid.times.size(); ++i)
    if (std::fabs(grid.times[i] - t) <= 1e-9 * (1.0 + std::fabs(t))) {
      k = i;
      break;
    }
  if (k == grid.times.size())
    throw ArgumentError("density_moments: requested time is not on the grid");
  const Vector& p = grid.values[k];
  if (p.size() != grid.ages.size())
    throw ArgumentError("density_moments: grid row does not match the age axis");
  if (grid.ages.size() < 2)
    throw ArgumentError("density_moments: need at least two grid ages");

  double mass = 0.0, first = 0.0;
  for (std::size_t i = 0; i + 1 < grid.ages.size(); ++i) {
    const double da = grid.ages[i + 1] - grid.ages[i];
    mass += 0.5 * da * (p[i] + p[i + 1]);
    first += 0.5 * da * (grid.ages[i] * p[i] + grid.ages[i + 1] * p[i + 1]);
  }
  if (!(mass > 0.0)) throw ZeroMassError("density_moments: mass is not positive");
  return {mass, first / mass};
}

}  // namespace compsim::oracles
