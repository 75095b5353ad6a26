#include "compsim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace compsim::numerics {

namespace {

constexpr double kPivotScale = 1e-13;

void validate_config(const SolverConfig& cfg) {
  if (!(cfg.rtol >= 0.0) || !(cfg.atol >= 0.0) || cfg.rtol + cfg.atol <= 0.0)
    throw ConfigError("solver tolerances must be nonnegative and not both zero");
  if (!(cfg.h_min > 0.0)) throw ConfigError("h_min must be positive");
  if (cfg.h_max != 0.0 && cfg.h_max < cfg.h_min)
    throw ConfigError("h_max must be at least h_min");
  if (cfg.h_init != 0.0 && cfg.h_init < 0.0) throw ConfigError("h_init must be nonnegative");
  if (cfg.max_steps <= 0) throw ConfigError("max_steps must be positive");
}

// Scale-invariant error measure: max_i |e_i| / (atol + rtol |y_i|).
// Bounding it by 1 keeps every component's local error within
// atol + rtol |y_i| and leaves the step sequence unchanged when part of
// the state is rescaled.
double error_ratio(const Vector& err, const Vector& y0, const Vector& y1,
                   const SolverConfig& cfg) {
  double worst = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    double scale = cfg.atol + cfg.rtol * std::max(std::fabs(y0[i]), std::fabs(y1[i]));
    if (scale <= 0.0) scale = std::numeric_limits<double>::min();
    worst = std::max(worst, std::fabs(err[i]) / scale);
  }
  return worst;
}

// Cubic Hermite interpolation on one accepted step.
void hermite(double theta, double h, const Vector& ya, const Vector& fa, const Vector& yb,
             const Vector& fb, Vector& out) {
  const double h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta);
  const double h10 = theta * (1.0 - theta) * (1.0 - theta);
  const double h01 = theta * theta * (3.0 - 2.0 * theta);
  const double h11 = theta * theta * (theta - 1.0);
  out.resize(ya.size());
  for (std::size_t i = 0; i < ya.size(); ++i)
    out[i] = h00 * ya[i] + h * h10 * fa[i] + h01 * yb[i] + h * h11 * fb[i];
}

// Dormand-Prince 5(4) coefficients.
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kB1 = 35.0 / 384.0, kB3 = 500.0 / 1113.0, kB4 = 125.0 / 192.0,
                 kB5 = -2187.0 / 6784.0, kB6 = 11.0 / 84.0;
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;

// Drives the integration and hands every accepted step
// (ta, ya, fa, tb, yb, fb) to the sink. fa and fb are exact field
// evaluations at the step endpoints, so the sink can interpolate.
template <typename Sink>
void drive(const OdeField& field, double t0, const Vector& x0, double t1,
           const SolverConfig& cfg, Sink&& sink) {
  validate_config(cfg);
  const std::size_t n = x0.size();
  if (n == 0) throw ArgumentError("integrate_ivp: empty state");
  if (!(t1 >= t0)) throw ArgumentError("integrate_ivp: t1 must be at least t0");
  if (t1 == t0) return;

  const double horizon = t1 - t0;
  const double h_max = cfg.h_max > 0.0 ? cfg.h_max : horizon / 100.0;
  if (h_max < cfg.h_min) throw ConfigError("resolved h_max is below h_min");

  double t = t0;
  Vector y = x0;
  long steps = 0;

  if (cfg.method == SolverConfig::Method::Rk4Fixed) {
    const double h_base = cfg.h_init > 0.0 ? cfg.h_init : horizon / 10000.0;
    Vector k1(n), k2(n), k3(n), k4(n), ytmp(n), ynew(n), fnew(n);
    field(t, y, k1);
    while (t < t1) {
      if (++steps > cfg.max_steps)
        throw BudgetError("integrate_ivp: step budget exhausted");
      double h = std::min(h_base, t1 - t);
      const double tb = (t + h >= t1) ? t1 : t + h;
      h = tb - t;
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k1[i];
      field(t + 0.5 * h, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + 0.5 * h * k2[i];
      field(t + 0.5 * h, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * k3[i];
      field(tb, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      field(tb, ynew, fnew);
      sink(t, y, k1, tb, ynew, fnew);
      t = tb;
      y = ynew;
      k1 = fnew;
    }
    return;
  }

  // Dormand-Prince 5(4) with FSAL.
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y5(n), err(n);
  field(t, y, k1);
  double h = cfg.h_init > 0.0 ? cfg.h_init : h_max / 10.0;
  h = std::clamp(h, cfg.h_min, h_max);

  while (t < t1) {
    if (++steps > cfg.max_steps) throw BudgetError("integrate_ivp: step budget exhausted");
    bool clipped = false;
    if (t + h >= t1) {
      h = t1 - t;
      clipped = true;
    }
    const double tb = clipped ? t1 : t + h;

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * kA21 * k1[i];
    field(t + kC2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
    field(t + kC3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
    field(t + kC4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] + kA54 * k4[i]);
    field(t + kC5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] + kA64 * k4[i] +
                            kA65 * k5[i]);
    field(tb, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = y[i] +
              h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] + kB5 * k5[i] + kB6 * k6[i]);
    field(tb, y5, k7);
    for (std::size_t i = 0; i < n; ++i)
      err[i] = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] + kE5 * k5[i] + kE6 * k6[i] +
                    kE7 * k7[i]);

    const double ratio = error_ratio(err, y, y5, cfg);
    if (ratio <= 1.0) {
      sink(t, y, k1, tb, y5, k7);
      t = tb;
      y = y5;
      k1 = k7;  // FSAL
    } else if (h <= cfg.h_min * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "integrate_ivp: step control wants a step below h_min = " << cfg.h_min << " at t = "
          << t;
      throw StiffnessError(msg.str());
    }

    double factor = 0.9 * std::pow(1.0 / std::max(ratio, 1e-300), 0.2);
    factor = std::clamp(factor, 0.2, 5.0);
    h = std::clamp(h * factor, cfg.h_min, h_max);
  }
}

}  // namespace

LuFactorization::LuFactorization(Matrix a) : n_(a.rows()), lu_(std::move(a)), pivots_(n_) {
  if (!lu_.square()) throw ArgumentError("LU factorization needs a square matrix");
  const double scale = max_abs(lu_);
  const double pivot_floor = kPivotScale * (scale > 0.0 ? scale : 1.0);

  for (std::size_t k = 0; k < n_; ++k) {
    std::size_t p = k;
    double best = std::fabs(lu_(k, k));
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double v = std::fabs(lu_(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best < pivot_floor) throw SingularMatrixError("matrix is numerically singular");
    pivots_[k] = p;
    if (p != k)
      for (std::size_t j = 0; j < n_; ++j) std::swap(lu_(k, j), lu_(p, j));
    for (std::size_t i = k + 1; i < n_; ++i) {
      const double m = lu_(i, k) / lu_(k, k);
      lu_(i, k) = m;
      for (std::size_t j = k + 1; j < n_; ++j) lu_(i, j) -= m * lu_(k, j);
    }
  }
}

Vector LuFactorization::solve(const Vector& b) const {
  if (b.size() != n_) throw ArgumentError("solve: right-hand side has the wrong length");
  Vector x = b;
  for (std::size_t k = 0; k < n_; ++k)
    if (pivots_[k] != k) std::swap(x[k], x[pivots_[k]]);
  for (std::size_t i = 1; i < n_; ++i) {
    double acc = x[i];
    for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * x[j];
    x[i] = acc;
  }
  for (std::size_t i = n_; i-- > 0;) {
    double acc = x[i];
    for (std::size_t j = i + 1; j < n_; ++j) acc -= lu_(i, j) * x[j];
    x[i] = acc / lu_(i, i);
  }
  return x;
}

Vector solve_linear(const Matrix& a, const Vector& b) { return LuFactorization(a).solve(b); }

Matrix invert(const Matrix& a) {
  LuFactorization lu(a);
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    Vector col = lu.solve(e);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

Trajectory integrate_ivp(const OdeField& field, double t0, const Vector& x0, double t1,
                         const SolverConfig& cfg) {
  Trajectory traj;
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  drive(field, t0, x0, t1, cfg,
        [&](double, const Vector&, const Vector&, double tb, const Vector& yb, const Vector&) {
          traj.times.push_back(tb);
          traj.states.push_back(yb);
        });
  return traj;
}

Trajectory integrate_ivp(const OdeField& field, double t0, const Vector& x0, double t1,
                         const SolverConfig& cfg, const std::vector<double>& output_times) {
  if (output_times.empty()) throw ArgumentError("integrate_ivp: no output times requested");
  for (std::size_t k = 0; k < output_times.size(); ++k) {
    if (output_times[k] < t0 || output_times[k] > t1)
      throw ArgumentError("integrate_ivp: output time outside [t0, t1]");
    if (k > 0 && !(output_times[k] > output_times[k - 1]))
      throw ArgumentError("integrate_ivp: output times must be strictly increasing");
  }

  Trajectory traj;
  traj.dense_output = true;
  traj.times = output_times;
  traj.states.resize(output_times.size());
  std::size_t cursor = 0;
  if (cursor < output_times.size() && output_times[cursor] == t0) {
    traj.states[cursor] = x0;
    ++cursor;
  }

  Vector interp;
  drive(field, t0, x0, t1, cfg,
        [&](double ta, const Vector& ya, const Vector& fa, double tb, const Vector& yb,
            const Vector& fb) {
          while (cursor < output_times.size() && output_times[cursor] <= tb) {
            const double tq = output_times[cursor];
            if (tq == tb) {
              traj.states[cursor] = yb;
            } else {
              hermite((tq - ta) / (tb - ta), tb - ta, ya, fa, yb, fb, interp);
              traj.states[cursor] = interp;
            }
            ++cursor;
          }
        });
  if (cursor != output_times.size())
    throw NumericsError("integrate_ivp: integration ended before the last output time");
  return traj;
}

TransitionMatrix transition_operator(const core::CompartmentalSystem& system, double t0,
                                     double t1, const SolverConfig& cfg) {
  const std::size_t d = system.dimension();
  Matrix b;
  Vector s;
  OdeField field = [&system, &b, &s, d](double t, const Vector& y, Vector& dydt) {
    system.evaluate_into(t, b, s);
    dydt.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const double bik = b(i, k);
        if (bik == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) dydt[i * d + j] += bik * y[k * d + j];
      }
  };

  Vector y0(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) y0[i * d + i] = 1.0;

  TransitionMatrix result;
  result.t0 = t0;
  result.t1 = t1;
  result.phi = Matrix(d, d);
  if (t1 == t0) {
    result.phi = Matrix::identity(d);
    return result;
  }
  Trajectory traj = integrate_ivp(field, t0, y0, t1, cfg);
  const Vector& yend = traj.states.back();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) result.phi(i, j) = yend[i * d + j];
  return result;
}

Vector equilibrium(const Matrix& b, const Vector& s, std::ostream* warn) {
  Vector rhs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) rhs[i] = -s[i];
  Vector x = solve_linear(b, rhs);
  if (warn) {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!(x[i] > 0.0)) {
        *warn << "warning: equilibrium component " << (i + 1) << " is not positive (" << x[i]
              << ")\n";
        break;
      }
  }
  return x;
}

Vector pullback_solution(const core::CompartmentalSystem& system, double t, double horizon,
                         const SolverConfig& cfg) {
  if (!(horizon > 0.0)) throw ArgumentError("pullback_solution: horizon must be positive");
  const double start = t - horizon;
  system.domain().require(start);

  const std::size_t d = system.dimension();
  Matrix b;
  Vector s;
  OdeField field = [&system, &b, &s, d](double u, const Vector& y, Vector& dydt) {
    system.evaluate_into(u, b, s);
    dydt.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      double acc = s[i];
      for (std::size_t j = 0; j < d; ++j) acc += b(i, j) * y[j];
      dydt[i] = acc;
    }
  };

  Vector zero(d, 0.0);
  Trajectory traj = integrate_ivp(field, start, zero, t, cfg);
  return traj.states.back();
}

double pullback_truncation_bound(const core::CompartmentalSystem& system,
                                 const core::StabilityCertificate& certificate, double t,
                                 double horizon, std::size_t n_probe) {
  if (!certificate.granted)
    throw ArgumentError("pullback_truncation_bound: needs a granted certificate");
  if (!(horizon > 0.0))
    throw ArgumentError("pullback_truncation_bound: horizon must be positive");
  if (n_probe < 2) throw ArgumentError("pullback_truncation_bound: need at least two probes");

  double sup_s = 0.0;
  Matrix b;
  Vector s;
  for (double u : core::uniform_grid(t - horizon, t, n_probe)) {
    system.evaluate_into(u, b, s);
    sup_s = std::max(sup_s, inf_norm(s));
  }
  return std::exp(-certificate.gamma * horizon) * sup_s / certificate.gamma;
}

}  // namespace compsim::numerics
