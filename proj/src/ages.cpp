#include "compsim/ages.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace compsim::ages {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void require_positive_masses(const Vector& x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] > kMassFloor)) {
      std::ostringstream msg;
      msg << "pool " << (i + 1) << " mass " << x[i] << " is at or below the floor "
          << kMassFloor;
      throw DegenerateMassError(msg.str());
    }
}

Vector mean_age_rhs_raw(const Matrix& b, const Vector& s, const Vector& x, const Vector& abar) {
  require_positive_masses(x);
  const std::size_t d = x.size();
  Vector g(d);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = -abar[i] * s[i];
    for (std::size_t j = 0; j < d; ++j) acc += (abar[j] - abar[i]) * b(i, j) * x[j];
    g[i] = 1.0 + acc / x[i];
  }
  return g;
}

}  // namespace

Vector mean_age_rhs(const core::CompartmentalSystem& system, double t, const AgeState& state) {
  const std::size_t d = system.dimension();
  if (state.x.size() != d || state.abar.size() != d)
    throw ArgumentError("mean_age_rhs: state size does not match the system");
  auto [b, s] = system.evaluate(t);
  return mean_age_rhs_raw(b, s, state.x, state.abar);
}

Matrix mean_age_matrix(const core::CompartmentalSystem& system, double t, const Vector& x) {
  const std::size_t d = system.dimension();
  if (x.size() != d) throw ArgumentError("mean_age_matrix: state size does not match the system");
  auto [b, s] = system.evaluate(t);
  require_positive_masses(x);

  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    double diag = -s[i];
    for (std::size_t j = 0; j < d; ++j) {
      if (i == j) continue;
      a(i, j) = b(i, j) * x[j] / x[i];
      diag -= b(i, j) * x[j];
    }
    a(i, i) = diag / x[i];
  }
  return a;
}

double transit_time_at(const core::CompartmentalSystem& system, const AgeState& state) {
  const std::size_t d = system.dimension();
  if (state.x.size() != d || state.abar.size() != d)
    throw ArgumentError("transit_time_at: state size does not match the system");
  auto [b, s] = system.evaluate(state.t);

  double num = 0.0, den = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double col = 0.0;
    for (std::size_t j = 0; j < d; ++j) col += b(j, i);
    const double w = state.x[i] * col;
    num += state.abar[i] * w;
    den += w;
    scale += std::fabs(w);
  }
  if (scale == 0.0 || std::fabs(den) <= 1e-14 * scale)
    throw NoOutflowError("transit_time_at: no pool has outflow at this time");
  return num / den;
}

double mean_age_at(const AgeState& state) {
  if (state.x.size() != state.abar.size())
    throw ArgumentError("mean_age_at: masses and ages differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    num += state.abar[i] * state.x[i];
    den += state.x[i];
  }
  if (!(den > 0.0)) throw ZeroMassError("mean_age_at: total mass is not positive");
  return num / den;
}

Vector equilibrium_mean_ages(const Matrix& b, const Vector& s) {
  Vector x_star = numerics::equilibrium(b, s);
  require_positive_masses(x_star);
  // abar* = -(X*)^{-1} B^{-1} X* 1, and X* 1 is x* itself.
  Vector v = numerics::solve_linear(b, x_star);
  Vector abar(x_star.size());
  for (std::size_t i = 0; i < abar.size(); ++i) abar[i] = -v[i] / x_star[i];
  return abar;
}

AutonomousSummary autonomous_summary(const Matrix& b, const Vector& s) {
  const std::size_t d = s.size();
  if (!b.square() || b.rows() != d)
    throw ArgumentError("autonomous_summary: matrix and input sizes do not match");
  double total_in = 0.0;
  for (double v : s) {
    if (v < 0.0) throw ArgumentError("autonomous_summary: inputs must be nonnegative");
    total_in += v;
  }
  if (!(total_in > 0.0)) throw ArgumentError("autonomous_summary: input vector is zero");

  AutonomousSummary out;
  out.x_star = numerics::equilibrium(b, s);
  out.abar_star = equilibrium_mean_ages(b, s);

  Vector ones(d, -1.0);
  out.r = numerics::solve_linear(transpose(b), ones);

  out.p = Matrix(d, d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (!(b(i, i) < 0.0))
      throw ArgumentError("autonomous_summary: diagonal entries must be negative");
    for (std::size_t j = 0; j < d; ++j)
      if (i != j) out.p(i, j) = -b(j, i) / b(i, i);
  }

  out.beta.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.beta[i] = s[i] / total_in;
  const double total_mass = sum(out.x_star);
  out.eta.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.eta[i] = out.x_star[i] / total_mass;

  double r_dot_beta = 0.0, r_dot_eta = 0.0, eta_dot_age = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    r_dot_beta += out.r[i] * out.beta[i];
    r_dot_eta += out.r[i] * out.eta[i];
    eta_dot_age += out.eta[i] * out.abar_star[i];
  }
  out.transit_time = r_dot_beta;
  out.mean_age = r_dot_eta;
  out.turnover = total_mass / total_in;

  // Two independent routes to the same quantities; disagreement beyond
  // rounding means the linear algebra went wrong.
  const double tol = 1e-8;
  if (std::fabs(out.transit_time - out.turnover) > tol * (1.0 + std::fabs(out.transit_time)))
    throw std::logic_error("autonomous_summary: transit time and turnover disagree");
  if (std::fabs(out.mean_age - eta_dot_age) > tol * (1.0 + std::fabs(out.mean_age)))
    throw std::logic_error("autonomous_summary: mean age routes disagree");
  return out;
}

Vector frozen_mean_ages_at(const core::CompartmentalSystem& system, double t0) {
  auto [b, s] = system.evaluate(t0);
  return equilibrium_mean_ages(b, s);
}

AgeTimeSeries simulate_with_ages(const core::CompartmentalSystem& system, double t0,
                                 const Vector& x0, const Vector& abar0, double t1,
                                 const numerics::SolverConfig& cfg,
                                 const std::vector<double>& output_times) {
  const std::size_t d = system.dimension();
  if (x0.size() != d || abar0.size() != d)
    throw ArgumentError("simulate_with_ages: initial state size does not match the system");
  if (!(t1 > t0)) throw ArgumentError("simulate_with_ages: t1 must exceed t0");
  for (double a : abar0)
    if (a < 0.0) throw ArgumentError("simulate_with_ages: initial mean ages must be >= 0");

  Matrix b;
  Vector s;
  Vector x(d), abar(d);
  numerics::OdeField field = [&](double t, const Vector& y, Vector& dydt) {
    system.evaluate_into(t, b, s);
    dydt.resize(2 * d);
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = y[i];
      abar[i] = y[d + i];
    }
    require_positive_masses(x);
    for (std::size_t i = 0; i < d; ++i) {
      double dx = s[i];
      double da = -abar[i] * s[i];
      for (std::size_t j = 0; j < d; ++j) {
        dx += b(i, j) * x[j];
        da += (abar[j] - abar[i]) * b(i, j) * x[j];
      }
      dydt[i] = dx;
      dydt[d + i] = 1.0 + da / x[i];
    }
  };

  Vector y0(2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    y0[i] = x0[i];
    y0[d + i] = abar0[i];
  }

  numerics::Trajectory traj =
      numerics::integrate_ivp(field, t0, y0, t1, cfg, output_times);

  AgeTimeSeries series;
  series.samples.resize(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    AgeSample& sample = series.samples[k];
    sample.t = traj.times[k];
    sample.x.assign(traj.states[k].begin(), traj.states[k].begin() + static_cast<long>(d));
    sample.abar.assign(traj.states[k].begin() + static_cast<long>(d), traj.states[k].end());

    AgeState state{sample.t, sample.x, sample.abar};
    try {
      sample.transit_time = transit_time_at(system, state);
    } catch (const NoOutflowError&) {
      sample.transit_time = kNan;
    }
    sample.mean_age = mean_age_at(state);

    try {
      system.evaluate_into(sample.t, b, s);
      AutonomousSummary frozen = autonomous_summary(b, s);
      sample.frozen_transit = frozen.transit_time;
      sample.frozen_mean_age = frozen.mean_age;
    } catch (const Error&) {
      sample.frozen_transit = kNan;
      sample.frozen_mean_age = kNan;
    }
  }
  return series;
}

}  // namespace compsim::ages
