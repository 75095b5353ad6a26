#include "compsim/casa.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "compsim/ages.hpp"
#include "compsim/errors.hpp"
#include "compsim/numerics.hpp"

namespace compsim::casa {

namespace {

constexpr double kPreindustrialCo2 = 285.0;
constexpr double kGrowthRate = 0.0305;
constexpr double kCo2Cap = 1715.0;

// 0-based (row, col) positions whose rate is scaled by the shared
// environmental factor xi(t): the litter loss rates and every soil row.
// Everything else in the matrix is constant.
constexpr std::pair<int, int> kXiCells[] = {
    {3, 3}, {4, 4}, {5, 5},                          // litter decay
    {6, 3}, {6, 4}, {6, 5}, {6, 6}, {6, 7}, {6, 8},  // microbial soil row
    {7, 4}, {7, 5}, {7, 6}, {7, 7}, {7, 8},          // slow soil row
    {8, 6}, {8, 7}, {8, 8},                          // passive soil row
};

}  // namespace

void CasaParams::validate() const {
  std::string bad;
  auto flag = [&](const char* name) {
    if (!bad.empty()) bad += ", ";
    bad += name;
  };
  auto neg = [&](double v, const char* name) {
    if (!(v < 0.0)) flag(name);
  };
  auto nonneg = [&](double v, const char* name) {
    if (!(v >= 0.0)) flag(name);
  };
  auto pos = [&](double v, const char* name) {
    if (!(v > 0.0)) flag(name);
  };
  neg(b11, "b11"); neg(b22, "b22"); neg(b33, "b33");
  neg(b44, "b44"); neg(b55, "b55"); neg(b66, "b66");
  neg(b77, "b77"); neg(b88, "b88"); neg(b99, "b99");
  nonneg(b41, "b41"); nonneg(b42, "b42"); nonneg(b51, "b51"); nonneg(b52, "b52");
  nonneg(b63, "b63"); nonneg(b74, "b74"); nonneg(b75, "b75"); nonneg(b76, "b76");
  nonneg(b78, "b78"); nonneg(b79, "b79"); nonneg(b85, "b85"); nonneg(b86, "b86");
  nonneg(b87, "b87"); nonneg(b89, "b89"); nonneg(b97, "b97"); nonneg(b98, "b98");
  nonneg(f1, "f1"); nonneg(f2, "f2"); nonneg(f3, "f3");
  if (!(f1 + f2 + f3 > 0.0 && f1 + f2 + f3 <= 1.0)) flag("f1+f2+f3");
  pos(sigma, "sigma"); pos(alpha, "alpha"); pos(rho, "rho");
  pos(xi_b, "xi_b"); pos(s0, "s0");
  if (!bad.empty()) throw ConfigError("scenario parameters out of range: " + bad);
}

double co2(const CasaParams& p, double t) {
  if (t < 0.0) t = 0.0;
  const double growth = std::exp(kGrowthRate * t);
  if (p.co2_model == Co2Model::Verbatim)
    return kCo2Cap * std::exp(kGrowthRate * t / (kCo2Cap + growth - 1.0));
  return kPreindustrialCo2 * kCo2Cap * growth /
         (kCo2Cap + kPreindustrialCo2 * (growth - 1.0));
}

double temperature(const CasaParams& p, double x_a) {
  if (!(x_a > 0.0)) throw DomainError("temperature: atmospheric carbon must be positive");
  return p.t_s0 + (p.sigma / std::log(2.0)) * std::log(x_a / kPreindustrialCo2);
}

double gamma_star(double t_celsius) {
  const double d = t_celsius - 25.0;
  return 42.7 + 1.68 * d + 0.012 * d * d;
}

double beta_sens(const CasaParams& p, double x_a, double t_celsius) {
  const double g = gamma_star(t_celsius);
  const double rx = p.rho * x_a;
  const double den = (rx - g) * (rx + 2.0 * g);
  const double scale = (std::fabs(rx) + std::fabs(g)) * (std::fabs(rx) + 2.0 * std::fabs(g));
  if (!(std::fabs(den) >= 1e-9 * scale) || scale == 0.0)
    throw SingularMatrixError("beta_sens: sensitivity formula has a pole near rho*x_a == gamma");
  return 3.0 * rx * g / den;
}

double xi_scale(const CasaParams& p, double t_celsius) {
  return std::pow(p.xi_b, 0.1 * t_celsius - 2.0);
}

Vector input_vector(const CasaParams& p, double t) {
  const double x_a = co2(p, t);
  const double t_s = temperature(p, x_a);
  const double beta = beta_sens(p, x_a, t_s);
  const double npp = p.alpha * p.s0 * (1.0 + beta * std::log(x_a / kPreindustrialCo2));
  Vector s(9, 0.0);
  s[0] = p.f1 * npp;
  s[1] = p.f2 * npp;
  s[2] = p.f3 * npp;
  return s;
}

std::function<double(double)> make_xi_forcing(const CasaParams& p) {
  CasaParams copy = p;
  return [copy](double t) {
    const double x_a = co2(copy, t);
    return xi_scale(copy, temperature(copy, x_a));
  };
}

std::function<double(double)> make_input_forcing(const CasaParams& p) {
  CasaParams copy = p;
  // Input forcings scale the base rate, and the base input vector carries
  // the t = 0 magnitude, so return npp(t)/npp(0).
  const auto relative_npp = [](const CasaParams& q, double t) {
    const double x_a = co2(q, t);
    const double t_s = temperature(q, x_a);
    return 1.0 + beta_sens(q, x_a, t_s) * std::log(x_a / kPreindustrialCo2);
  };
  const double npp0 = relative_npp(copy, 0.0);
  if (npp0 == 0.0)
    throw ConfigError("scenario input is zero at the start of the run; the input profile is undefined");
  return [copy, npp0, relative_npp](double t) { return relative_npp(copy, t) / npp0; };
}

core::CompartmentalSystem build_casa_system(const CasaParams& p) {
  p.validate();

  Matrix b(9, 9, 0.0);
  b(0, 0) = p.b11;
  b(1, 1) = p.b22;
  b(2, 2) = p.b33;
  b(3, 3) = p.b44;
  b(4, 4) = p.b55;
  b(5, 5) = p.b66;
  b(6, 6) = p.b77;
  b(7, 7) = p.b88;
  b(8, 8) = p.b99;

  b(3, 0) = p.b41;
  b(3, 1) = p.b42;
  b(4, 0) = p.b51;
  b(4, 1) = p.b52;
  b(5, 2) = p.b63;
  b(6, 3) = p.b74;
  b(6, 4) = p.b75;
  b(6, 5) = p.b76;
  b(6, 7) = p.b78;
  b(6, 8) = p.b79;
  b(7, 4) = p.b85;
  b(7, 5) = p.b86;
  b(7, 6) = p.b87;
  b(7, 8) = p.b89;
  b(8, 6) = p.b97;
  b(8, 7) = p.b98;

  core::TimeDomain domain;  // environmental drivers clamp below t = 0
  core::CompartmentalSystem system(std::move(b), input_vector(p, 0.0), domain);

  auto xi = core::ScalarForcing::function("casa_xi", make_xi_forcing(p));
  for (const auto& [i, j] : kXiCells)
    if (system.base_matrix()(i, j) != 0.0) system.set_matrix_forcing(i, j, xi);

  auto npp = core::ScalarForcing::function("casa_npp", make_input_forcing(p));
  for (int i = 0; i < 3; ++i)
    if (system.base_input()[i] != 0.0) system.set_input_forcing(i, npp);

  const auto report =
      core::check_compartmental(system, core::uniform_grid(0.0, 650.0, 512));
  if (!report.compliant()) {
    const auto& v = report.violations.front();
    std::ostringstream msg;
    msg << "scenario system violates " << core::condition_id(v.condition) << " at pool "
        << v.pool_i << ", t = " << v.time;
    throw ConfigError(msg.str());
  }
  return system;
}

ages::AgeTimeSeries run_scenario(const CasaParams& p, double t_end,
                                 const numerics::SolverConfig& cfg, double dt_out) {
  if (!(t_end > 0.0)) throw ArgumentError("run_scenario: end time must be positive");
  if (!(dt_out > 0.0)) throw ArgumentError("run_scenario: output spacing must be positive");

  auto system = build_casa_system(p);
  const auto [b0, s0] = system.evaluate(0.0);

  const Vector x0 = numerics::equilibrium(b0, s0, nullptr);
  for (std::size_t i = 0; i < x0.size(); ++i)
    if (!(x0[i] > 0.0)) {
      std::ostringstream msg;
      msg << "run_scenario: start-of-run equilibrium is not positive at pool " << i + 1
          << " (value " << x0[i] << ")";
      throw ConfigError(msg.str());
    }
  const Vector abar0 = ages::equilibrium_mean_ages(b0, s0);

  std::vector<double> output_times;
  for (std::size_t k = 0; k * dt_out < t_end * (1.0 - 1e-12); ++k)
    output_times.push_back(k * dt_out);
  output_times.push_back(t_end);

  return ages::simulate_with_ages(system, 0.0, x0, abar0, t_end, cfg, output_times);
}

}  // namespace compsim::casa
