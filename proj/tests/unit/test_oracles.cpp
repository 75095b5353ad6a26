#include <cmath>
#include <random>

#include "doctest.h"

#include "compsim/errors.hpp"
#include "compsim/numerics.hpp"
#include "compsim/oracles.hpp"

using namespace compsim;

namespace {

const oracles::TimeFunction kZero = [](double) { return 0.0; };
const oracles::TimeFunction kOne = [](double) { return 1.0; };

}  // namespace

TEST_SUITE("oracles") {

TEST_CASE("adaptive quadrature on closed forms") {
  CHECK(oracles::integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(oracles::integrate_adaptive([](double x) { return std::exp(-x); }, 0.0, 1.0) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  // A full period of sin integrates to zero even though the initial
  // panel midpoints alias the oscillation.
  CHECK(oracles::integrate_adaptive([](double x) { return std::sin(x); }, 0.0,
                                    2.0 * std::acos(-1.0)) ==
        doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
  // Rapid oscillation still converges to the analytic value.
  const double value =
      oracles::integrate_adaptive([](double x) { return std::sin(40.0 * x); }, 0.0, 1.0, 1e-12);
  CHECK(value == doctest::Approx((1.0 - std::cos(40.0)) / 40.0).epsilon(1e-9));
}

TEST_CASE("adaptive quadrature interval conventions") {
  CHECK(oracles::integrate_adaptive(kOne, 2.0, 2.0) == 0.0);
  const double forward = oracles::integrate_adaptive([](double x) { return x; }, 0.0, 2.0);
  const double backward = oracles::integrate_adaptive([](double x) { return x; }, 2.0, 0.0);
  CHECK(forward == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(backward == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK_THROWS_AS(oracles::integrate_adaptive(kOne, 0.0, 1.0, 0.0), ArgumentError);
}

TEST_CASE("scalar_solution on constant coefficients") {
  // x' = -x + 1, x(0) = 0 -> x(1) = 1 - exp(-1).
  const double x1 = oracles::scalar_solution([](double) { return -1.0; }, kOne, 0.0, 0.0, 1.0);
  CHECK(x1 == doctest::Approx(0.6321205588285577).epsilon(1e-10));
  // Pure decay: x' = -2x, x(0) = 3 -> 3 exp(-2t).
  const double x2 =
      oracles::scalar_solution([](double) { return -2.0; }, kZero, 0.0, 3.0, 1.5);
  CHECK(x2 == doctest::Approx(3.0 * std::exp(-3.0)).epsilon(1e-10));
  // Evaluating at the initial time returns the initial value.
  CHECK(oracles::scalar_solution([](double) { return -1.0; }, kOne, 2.0, 7.0, 2.0) == 7.0);
}

TEST_CASE("scalar_solution matches the general integrator") {
  const oracles::TimeFunction b = [](double t) { return -(2.0 + std::sin(t)); };
  const double oracle = oracles::scalar_solution(b, kOne, 0.0, 1.0, 4.0, 1e-12);

  const numerics::OdeField field = [&](double t, const Vector& y, Vector& dydt) {
    dydt[0] = b(t) * y[0] + 1.0;
  };
  numerics::SolverConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  const auto traj = numerics::integrate_ivp(field, 0.0, Vector{1.0}, 4.0, cfg);
  CHECK(std::fabs(traj.states.back()[0] - oracle) <= 1e-8);
}

TEST_CASE("cascade_solution on constant coefficients") {
  // x1' = -x1, x2' = 0.5 x1 - 2 x2 + 1 from (1, 0):
  // x2(t) = 1/2 + exp(-t)/2 - exp(-2t).
  const auto x = oracles::cascade_solution(
      [](double) { return -1.0; }, [](double) { return 0.5; }, [](double) { return -2.0; },
      kOne, 0.0, {1.0, 0.0}, 1.0);
  CHECK(x[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
  CHECK(x[1] ==
        doctest::Approx(0.5 + 0.5 * std::exp(-1.0) - std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("cascade_solution keeps an empty system empty") {
  const auto x = oracles::cascade_solution(
      [](double) { return -1.0; }, [](double) { return 0.5; }, [](double) { return -2.0; },
      kZero, 0.0, {0.0, 0.0}, 3.0);
  CHECK(x[0] == 0.0);
  CHECK(std::fabs(x[1]) <= 1e-12);
}

TEST_CASE("cascade_solution matches the general integrator on varying rates") {
  const oracles::TimeFunction b11 = [](double t) { return -(2.0 + std::sin(t)); };
  const oracles::TimeFunction b21 = [](double t) { return 0.5 + 0.25 * std::cos(t); };
  const oracles::TimeFunction b22 = [](double) { return -1.5; };
  const oracles::TimeFunction s2 = [](double t) { return 1.0 + 0.5 * std::sin(2.0 * t); };
  const auto oracle = oracles::cascade_solution(b11, b21, b22, s2, 0.0, {1.0, 0.5}, 3.0, 1e-12);

  const numerics::OdeField field = [&](double t, const Vector& y, Vector& dydt) {
    dydt[0] = b11(t) * y[0];
    dydt[1] = b21(t) * y[0] + b22(t) * y[1] + s2(t);
  };
  numerics::SolverConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  const auto traj = numerics::integrate_ivp(field, 0.0, Vector{1.0, 0.5}, 3.0, cfg);
  CHECK(std::fabs(traj.states.back()[0] - oracle[0]) <= 1e-7);
  CHECK(std::fabs(traj.states.back()[1] - oracle[1]) <= 1e-7);
}

TEST_CASE("random scalar systems agree between oracle and integrator") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> amp(0.0, 0.8);
  std::uniform_real_distribution<double> freq(0.5, 3.0);
  std::uniform_real_distribution<double> base(0.5, 2.5);
  std::uniform_real_distribution<double> x0d(0.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const double b0 = base(rng), ba = amp(rng), bw = freq(rng);
    const double s0 = base(rng), sa = amp(rng), sw = freq(rng);
    const double x0 = x0d(rng);
    const oracles::TimeFunction b = [=](double t) { return -(b0 + ba * std::sin(bw * t)); };
    const oracles::TimeFunction s = [=](double t) { return s0 + sa * std::cos(sw * t); };
    const double oracle = oracles::scalar_solution(b, s, 0.0, x0, 2.0, 1e-12);
    const numerics::OdeField field = [&](double t, const Vector& y, Vector& dydt) {
      dydt[0] = b(t) * y[0] + s(t);
    };
    numerics::SolverConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    const auto traj = numerics::integrate_ivp(field, 0.0, Vector{x0}, 2.0, cfg);
    CHECK(std::fabs(traj.states.back()[0] - oracle) <=
          10.0 * (cfg.atol + cfg.rtol * std::fabs(oracle)) + 1e-10);
  }
}

TEST_CASE("age density boundary and characteristics") {
  const oracles::TimeFunction b = [](double) { return -1.0; };
  const oracles::TimeFunction s = [](double t) { return 2.0 + std::sin(t); };
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  const auto density = oracles::age_density_1d(b, s, kZero, 1.0, grid);
  REQUIRE(density.times.size() == 1);
  CHECK(density.times[0] == 1.0);
  REQUIRE(density.values.size() == 1);
  // Newborn material enters at the current input rate: p(0, t) = s(t).
  CHECK(density.values[0][0] == doctest::Approx(s(1.0)).epsilon(1e-10));
  // Along a characteristic: p(a, t) = s(t - a) exp(-a) for a < t.
  CHECK(density.values[0][2] == doctest::Approx(s(0.5) * std::exp(-0.5)).epsilon(1e-10));
  // Ages of material older than the window decay from the initial data;
  // p0 = 0 means nothing is there.
  CHECK(density.values[0][5] == 0.0);
  CHECK(density.values[0][6] == 0.0);
}

TEST_CASE("age density carries initial data for old ages") {
  const oracles::TimeFunction p0 = [](double a) { return a <= 2.0 ? 1.0 : 0.0; };
  const auto density =
      oracles::age_density_1d([](double) { return -0.5; }, kZero, p0, 1.0,
                              {0.0, 1.0, 1.5, 2.5, 3.5});
  // For a >= t = 1: p = p0(a - 1) exp(-0.5).
  const double decay = std::exp(-0.5);
  CHECK(density.values[0][1] == doctest::Approx(decay).epsilon(1e-10));  // p0(0) = 1
  CHECK(density.values[0][2] == doctest::Approx(decay).epsilon(1e-10));  // p0(0.5) = 1
  CHECK(density.values[0][3] == doctest::Approx(decay).epsilon(1e-10));  // p0(1.5) = 1
  CHECK(density.values[0][4] == 0.0);                                     // p0(2.5) = 0
}

TEST_CASE("age_density_1d validates its grid") {
  CHECK_THROWS_AS(oracles::age_density_1d(kZero, kZero, kZero, -1.0, {0.0, 1.0}),
                  ArgumentError);
  CHECK_THROWS_AS(oracles::age_density_1d(kZero, kZero, kZero, 1.0, {}), ArgumentError);
  CHECK_THROWS_AS(oracles::age_density_1d(kZero, kZero, kZero, 1.0, {0.5, 0.5}),
                  ArgumentError);
  CHECK_THROWS_AS(oracles::age_density_1d(kZero, kZero, kZero, 1.0, {-0.5, 0.5}),
                  ArgumentError);
}

TEST_CASE("density moments of a uniform initial density") {
  // At t = 0 a uniform density on [0, A] has mass A and mean age A / 2.
  const double A = 3.0;
  const oracles::TimeFunction p0 = [=](double a) { return a <= A ? 1.0 : 0.0; };
  std::vector<double> grid;
  for (int k = 0; k <= 3000; ++k) grid.push_back(A * k / 3000.0);
  const auto density = oracles::age_density_1d([](double) { return -1.0; }, kOne, p0, 0.0, grid);
  const auto [mass, mean] = oracles::density_moments(density, 0.0);
  CHECK(mass == doctest::Approx(A).epsilon(1e-6));
  CHECK(mean == doctest::Approx(A / 2.0).epsilon(1e-6));
}

TEST_CASE("density moments match the mean-age closed form") {
  // b = -1, s = 1, p0 = 0: mass(t) = 1 - exp(-t) and the mean age is
  // (1 - (1 + t) exp(-t)) / (1 - exp(-t)); at t = 5 that is
  // (1 - 6 exp(-5)) / (1 - exp(-5)).
  const double t = 5.0;
  std::vector<double> grid;
  const double half = 5e-4;
  for (int k = 0; k <= 20000; ++k) {
    const double a = 10.0 * k / 20000.0;
    if (std::fabs(a - t) < half) continue;  // straddle the p0/s interface
    grid.push_back(a);
  }
  const auto density =
      oracles::age_density_1d([](double) { return -1.0; }, kOne, kZero, t, grid);
  const auto [mass, mean] = oracles::density_moments(density, t);
  const double expect_mass = 1.0 - std::exp(-t);
  const double expect_mean = (1.0 - 6.0 * std::exp(-5.0)) / (1.0 - std::exp(-5.0));
  CHECK(mass == doctest::Approx(expect_mass).epsilon(1e-6));
  CHECK(mean == doctest::Approx(expect_mean).epsilon(1e-6));
  CHECK(mean == doctest::Approx(0.9660826).epsilon(1e-6));
}

TEST_CASE("density_moments rejects empty or mismatched grids") {
  const auto density =
      oracles::age_density_1d([](double) { return -1.0; }, kOne, kZero, 1.0,
                              {0.0, 0.5, 0.9});
  CHECK_THROWS_AS(oracles::density_moments(density, 2.0), ArgumentError);
  const auto vacuum =
      oracles::age_density_1d([](double) { return -1.0; }, kZero, kZero, 1.0,
                              {2.0, 3.0, 4.0});
  CHECK_THROWS_AS(oracles::density_moments(vacuum, 1.0), ZeroMassError);
}

}  // TEST_SUITE
