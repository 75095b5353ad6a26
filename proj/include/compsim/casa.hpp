#pragma once

#include <functional>

#include "compsim/ages.hpp"
#include "compsim/core.hpp"
#include "compsim/numerics.hpp"

namespace compsim::casa {

enum class Co2Model {
  /// Atmospheric CO2 curve exactly as published alongside the rate
  /// data; starts at 1715 ppmv at t = 0 and is kept for reproduction.
  Verbatim,
  /// Logistic interpretation anchored at 285 ppmv in year 0 and
  /// saturating at 1715 ppmv; the default scenario driver.
  Logistic,
};

/// Nine-pool terrestrial carbon cycle: leaf/root/wood plant pools (1-3),
/// metabolic/structural/CWD litter pools (4-6), microbial/slow/passive
/// soil pools (7-9). Rates are per year, time is years since 1850.
struct CasaParams {
  // Transfer and loss rates (1/yr). b<i><j> moves mass from pool j to
  // pool i; diagonal entries are total loss rates.
  double b11 = -0.67, b22 = -0.2, b33 = -0.04;
  double b41 = 0.5092, b42 = 0.0260, b44 = -2.5;
  double b51 = 0.1608, b52 = 0.1740, b55 = -0.4;
  double b63 = 0.04, b66 = -0.25;
  double b74 = 1.1250, b75 = 0.1530, b76 = 0.06, b77 = -0.7, b78 = 0.0103, b79 = 0.0002;
  double b85 = 0.042, b86 = 0.07, b87 = 0.3525, b88 = -0.023, b89 = 0.0;
  double b97 = 0.0045, b98 = 0.0001, b99 = -0.0004;

  double sigma = 4.5;   // equilibrium warming per CO2 doubling (C)
  double t_s0 = 15.0;   // surface temperature at t = 0 (C)
  double alpha = 0.5;   // fraction of GPP left after autotrophic respiration
  double f1 = 0.33, f2 = 0.33, f3 = 0.33;  // input split across plant pools
  double rho = 0.65;    // intracellular to atmospheric CO2 ratio
  double xi_b = 2.0;    // decomposition Q10 base
  double s0 = 120.0;    // GPP scale (PgC/yr)
  Co2Model co2_model = Co2Model::Logistic;

  void validate() const;  // ConfigError on out-of-range values
};

/// Atmospheric CO2 (ppmv) at time t; t < 0 clamps to the t = 0 value.
double co2(const CasaParams& p, double t);

/// Surface temperature response T_s0 + (sigma / ln 2) ln(x_a / 285).
double temperature(const CasaParams& p, double x_a);

/// CO2 compensation-point quadratic Gamma*(T).
double gamma_star(double t_celsius);

/// CO2 fertilization sensitivity 3 rho x_a Gamma / ((rho x_a - Gamma)
/// (rho x_a + 2 Gamma)). Raises SingularMatrixError at the pole
/// rho x_a = Gamma.
double beta_sens(const CasaParams& p, double x_a, double t_celsius);

/// Decomposition temperature scaling xi_b^(0.1 T - 2); equals 1 at 20 C.
double xi_scale(const CasaParams& p, double t_celsius);

/// Input vector s(t): pools 1-3 receive f_i alpha s0 (1 + beta ln(x_a/285)),
/// pools 4-9 receive nothing.
Vector input_vector(const CasaParams& p, double t);

/// Time profiles used as matrix and input forcings.
std::function<double(double)> make_xi_forcing(const CasaParams& p);
std::function<double(double)> make_input_forcing(const CasaParams& p);

/// Assembles the compartmental system: constant plant rows, xi(T_s(t))
/// on the litter diagonal entries and all soil rows, shared input
/// profile on the plant pools. Raises ConfigError when the assembled
/// system fails the compartmental sign conditions.
core::CompartmentalSystem build_casa_system(const CasaParams& p);

/// Runs the scenario from the equilibrium of the system frozen at t = 0
/// (masses and mean ages) and samples every dt_out years.
ages::AgeTimeSeries run_scenario(const CasaParams& p, double t_end,
                                 const numerics::SolverConfig& cfg,
                                 double dt_out = 1.0);

}  // namespace compsim::casa
