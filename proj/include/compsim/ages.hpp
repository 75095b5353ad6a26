#pragma once

#include <vector>

#include "compsim/core.hpp"
#include "compsim/matrix.hpp"
#include "compsim/numerics.hpp"

namespace compsim::ages {

/// Pool masses must stay above this floor wherever an age equation
/// divides by them; at or below it the state is treated as degenerate
/// and reported as an error, never silently clamped.
inline constexpr double kMassFloor = 1e-12;

/// Joint state of pool masses and their mean ages at one time.
struct AgeState {
  double t = 0.0;
  Vector x;     // masses, componentwise > 0
  Vector abar;  // mean ages, componentwise >= 0
};

/// One output sample of a simulation with ages. transit_time and
/// mean_age are the nonautonomous system-level series; the frozen pair
/// applies the autonomous formulas to (B(t), s(t)) at this sample's
/// time. Entries that are undefined at a sample (no outflow, or a
/// frozen system without positive equilibrium) are NaN.
struct AgeSample {
  double t = 0.0;
  Vector x;
  Vector abar;
  double transit_time = 0.0;     // R_t
  double mean_age = 0.0;         // M_t
  double frozen_transit = 0.0;   // R of the system frozen at t
  double frozen_mean_age = 0.0;  // M of the system frozen at t
};

struct AgeTimeSeries {
  std::vector<AgeSample> samples;
};

/// Equilibrium quantities of an autonomous system (B, s).
struct AutonomousSummary {
  Vector x_star;     // equilibrium masses
  Vector abar_star;  // equilibrium mean ages
  Vector r;          // expected exit time from each pool
  Matrix p;          // p_ij = -b_ji / b_ii, zero diagonal
  Vector beta;       // input distribution s / sum(s)
  Vector eta;        // mass distribution x* / sum(x*)
  double transit_time = 0.0;  // R = r . beta
  double mean_age = 0.0;      // M = r . eta
  double turnover = 0.0;      // U = sum(x*) / sum(s)
};

/// Right-hand side of the mean-age system at (t, x, abar):
///   g_i = 1 + [ sum_j (abar_j - abar_i) B(t)_ij x_j - abar_i s_i(t) ] / x_i.
/// Raises DegenerateMassError when any x_i <= kMassFloor. The time
/// argument selects where B and s are evaluated; state.t is not read.
Vector mean_age_rhs(const core::CompartmentalSystem& system, double t,
                    const AgeState& state);

/// Linear form of the same right-hand side: g = A(t, x) abar + 1 with
///   A_ij = B_ij x_j / x_i  (i != j),
///   A_ii = ( -s_i - sum_{j != i} B_ij x_j ) / x_i.
/// Row sums obey sum_j A_ij * x_i = -s_i.
Matrix mean_age_matrix(const core::CompartmentalSystem& system, double t,
                       const Vector& x);

/// Outflow-weighted mean age: R_t = sum_i abar_i x_i c_i / sum_i x_i c_i
/// with c_i the i-th column sum of B(t). Pools without outflow carry
/// zero weight; when every pool lacks outflow the mean is undefined and
/// NoOutflowError is raised.
double transit_time_at(const core::CompartmentalSystem& system, const AgeState& state);

/// Mass-weighted mean age: M_t = sum_i abar_i x_i / sum_i x_i.
double mean_age_at(const AgeState& state);

/// Equilibrium mean ages abar* = -(X*)^{-1} B^{-1} X* 1 where
/// X* = diag(x*). Raises on singular B or nonpositive x*.
Vector equilibrium_mean_ages(const Matrix& b, const Vector& s);

/// All autonomous summary quantities for constant (B, s) with s >= 0,
/// s != 0. Cross-checks R against the turnover ratio internally.
AutonomousSummary autonomous_summary(const Matrix& b, const Vector& s);

/// Integrates the coupled (mass, mean age) system from (x0, abar0) and
/// samples it at the given strictly increasing times in [t0, t1].
AgeTimeSeries simulate_with_ages(const core::CompartmentalSystem& system,
                                 double t0, const Vector& x0, const Vector& abar0,
                                 double t1, const numerics::SolverConfig& cfg,
                                 const std::vector<double>& output_times);

/// Default initial mean ages: the equilibrium ages of the system frozen
/// at t0.
Vector frozen_mean_ages_at(const core::CompartmentalSystem& system, double t0);

}  // namespace compsim::ages
