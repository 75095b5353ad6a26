#include <cmath>
#include <random>

#include "doctest.h"

#include "compsim/ages.hpp"
#include "compsim/core.hpp"
#include "compsim/errors.hpp"
#include "compsim/matrix.hpp"
#include "support/generators.hpp"

using namespace compsim;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

const Matrix kTwoPoolA = mat2(-1.0, 2.0, 0.5, -2.0);
const Matrix kTwoPoolB = mat2(-1.0, 1.0, 1.0, -2.0);

core::CompartmentalSystem scalar_system(double rate, double input) {
  Matrix b(1, 1);
  b(0, 0) = rate;
  return {b, Vector{input}};
}

}  // namespace

TEST_SUITE("ages") {

TEST_CASE("mean_age_rhs vanishes exactly at equilibrium") {
  SUBCASE("one pool") {
    const auto system = scalar_system(-0.5, 1.0);
    // x = s / 0.5 = 2, abar = 1/0.5 = 2: g = 1 - abar * s / x = 0.
    const Vector g = ages::mean_age_rhs(system, 0.0, {0.0, Vector{2.0}, Vector{2.0}});
    CHECK(g[0] == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("two pools") {
    core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
    const Vector g =
        ages::mean_age_rhs(system, 0.0, {0.0, Vector{2.0, 0.5}, Vector{2.5, 3.0}});
    CHECK(g[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(g[1] == doctest::Approx(0.0).scale(1.0));
  }
}

TEST_CASE("mean_age_rhs equals one when all ages are zero") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  const Vector g = ages::mean_age_rhs(system, 0.0, {0.0, Vector{2.0, 0.5}, Vector{0.0, 0.0}});
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("mean_age_rhs rejects degenerate masses") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  CHECK_THROWS_AS(
      ages::mean_age_rhs(system, 0.0, {0.0, Vector{2.0, 1e-13}, Vector{0.0, 0.0}}),
      DegenerateMassError);
  CHECK_THROWS_AS(ages::mean_age_matrix(system, 0.0, Vector{0.0, 1.0}),
                  DegenerateMassError);
}

TEST_CASE("mean_age_matrix matches the closed form") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  const Vector x{2.0, 0.5};
  const Matrix a = ages::mean_age_matrix(system, 0.0, x);
  CHECK(a(0, 0) == doctest::Approx(-1.0));
  CHECK(a(0, 1) == doctest::Approx(0.5));
  CHECK(a(1, 0) == doctest::Approx(2.0));
  CHECK(a(1, 1) == doctest::Approx(-2.0));
  // Row-sum identity: sum_j A_ij * x_i = -s_i.
  CHECK((a(0, 0) + a(0, 1)) * x[0] == doctest::Approx(-1.0));
  CHECK((a(1, 0) + a(1, 1)) * x[1] == doctest::Approx(0.0).scale(1.0));

  const auto one = scalar_system(-1.0, 0.5);
  const Matrix a1 = ages::mean_age_matrix(one, 0.0, Vector{2.0});
  CHECK(a1(0, 0) == doctest::Approx(-0.25));  // -s/x
}

TEST_CASE("row-sum identity holds for random compliant systems") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = 1 + trial % 6;
    const auto [b, s] = testsupport::random_compliant(rng, d);
    core::CompartmentalSystem system(b, s);
    const Vector x = testsupport::random_positive(rng, d);
    const Matrix a = ages::mean_age_matrix(system, 0.0, x);
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) row += a(i, j);
      CHECK(std::fabs(row * x[i] + s[i]) <= 1e-10);
    }
  }
}

TEST_CASE("matrix and direct right-hand sides agree") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 5;
    const auto [b, s] = testsupport::random_compliant(rng, d);
    core::CompartmentalSystem system(b, s);
    const Vector x = testsupport::random_positive(rng, d);
    const Vector abar = testsupport::random_positive(rng, d, 0.0, 5.0);
    const Vector g = ages::mean_age_rhs(system, 0.0, {0.0, x, abar});
    const Matrix a = ages::mean_age_matrix(system, 0.0, x);
    for (std::size_t i = 0; i < d; ++i) {
      double gi = 1.0;
      for (std::size_t j = 0; j < d; ++j) gi += a(i, j) * abar[j];
      CHECK(g[i] == doctest::Approx(gi).epsilon(1e-12));
    }
  }
}

TEST_CASE("transit_time_at weighs ages by outflow") {
  SUBCASE("two-pool equilibrium") {
    core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
    // Column sums: c = (-0.5, 0) -> only pool 1 leaves the system.
    const double r = ages::transit_time_at(system, {0.0, Vector{2.0, 0.5}, Vector{2.5, 3.0}});
    CHECK(r == doctest::Approx(2.5).epsilon(1e-12));
  }
  SUBCASE("single pool reduces to its mean age") {
    const auto system = scalar_system(-2.0, 1.0);
    const double r = ages::transit_time_at(system, {0.0, Vector{0.5}, Vector{3.25}});
    CHECK(r == doctest::Approx(3.25));
  }
  SUBCASE("closed system has no outflow") {
    core::CompartmentalSystem system(mat2(-1.0, 1.0, 1.0, -1.0), Vector{0.0, 0.0});
    CHECK_THROWS_AS(
        ages::transit_time_at(system, {0.0, Vector{1.0, 1.0}, Vector{1.0, 1.0}}),
        NoOutflowError);
  }
}

TEST_CASE("mean_age_at weighs ages by mass") {
  CHECK(ages::mean_age_at({0.0, Vector{2.0, 0.5}, Vector{2.5, 3.0}}) ==
        doctest::Approx(2.6).epsilon(1e-12));
  CHECK(ages::mean_age_at({0.0, Vector{7.0}, Vector{4.5}}) == doctest::Approx(4.5));
  CHECK(ages::mean_age_at({0.0, Vector{1.0, 3.0}, Vector{2.0, 2.0}}) == doctest::Approx(2.0));
}

TEST_CASE("equilibrium mean ages of the worked examples") {
  SUBCASE("first system") {
    const Vector abar = ages::equilibrium_mean_ages(kTwoPoolA, Vector{1.0, 0.0});
    CHECK(abar[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(abar[1] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("second system") {
    const Vector abar = ages::equilibrium_mean_ages(kTwoPoolB, Vector{1.0, 0.0});
    CHECK(abar[0] == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(abar[1] == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("one pool gives the inverse rate") {
    Matrix b(1, 1);
    b(0, 0) = -0.25;
    const Vector abar = ages::equilibrium_mean_ages(b, Vector{3.0});
    CHECK(abar[0] == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("equilibrium mean ages ignore input scale") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + trial % 4;
    const auto [b, s] = testsupport::random_compliant(rng, d);
    Vector s_scaled(d);
    for (std::size_t i = 0; i < d; ++i) s_scaled[i] = 137.0 * s[i];
    const Vector a = ages::equilibrium_mean_ages(b, s);
    const Vector a_scaled = ages::equilibrium_mean_ages(b, s_scaled);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::fabs(a[i] - a_scaled[i]) <= 1e-9);
  }
}

TEST_CASE("autonomous_summary of the first worked example") {
  const auto s = ages::autonomous_summary(kTwoPoolA, Vector{1.0, 0.0});
  CHECK(s.x_star[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.x_star[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.abar_star[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.abar_star[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.r[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.r[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.beta[0] == doctest::Approx(1.0));
  CHECK(s.beta[1] == doctest::Approx(0.0).scale(1.0));
  CHECK(s.eta[0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(s.eta[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.p(0, 0) == 0.0);
  CHECK(s.p(0, 1) == doctest::Approx(0.5).epsilon(1e-12));  // -b_10 / b_11... transposed
  CHECK(s.p(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.p(1, 1) == 0.0);
  CHECK(s.transit_time == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(s.mean_age == doctest::Approx(2.6).epsilon(1e-12));
  CHECK(s.turnover == doctest::Approx(2.5).epsilon(1e-12));
  // In this system new input reaches the surface pool only, so the
  // transit time sits below the mass-weighted mean age.
  CHECK(s.transit_time < s.mean_age);
}

TEST_CASE("autonomous_summary of the second worked example") {
  const auto s = ages::autonomous_summary(kTwoPoolB, Vector{1.0, 0.0});
  CHECK(s.x_star[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.x_star[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.r[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.r[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.p(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.p(1, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.transit_time == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.mean_age == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  CHECK(s.turnover == doctest::Approx(3.0).epsilon(1e-12));
  // Here material cycles back through the fast pool before it exits, so
  // the ordering flips.
  CHECK(s.transit_time > s.mean_age);
}

TEST_CASE("autonomous_summary rejects zero input") {
  CHECK_THROWS_AS(ages::autonomous_summary(kTwoPoolA, Vector{0.0, 0.0}), ArgumentError);
  CHECK_THROWS_AS(ages::autonomous_summary(kTwoPoolA, Vector{1.0, -0.5}), ArgumentError);
}

TEST_CASE("simulate_with_ages holds an equilibrium fixed") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  const auto series = ages::simulate_with_ages(system, 0.0, Vector{2.0, 0.5},
                                               Vector{2.5, 3.0}, 20.0, {},
                                               core::uniform_grid(0.0, 20.0, 21));
  REQUIRE(series.samples.size() == 21);
  for (const auto& smp : series.samples) {
    CHECK(smp.x[0] == doctest::Approx(2.0).epsilon(1e-7));
    CHECK(smp.x[1] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(smp.abar[0] == doctest::Approx(2.5).epsilon(1e-7));
    CHECK(smp.abar[1] == doctest::Approx(3.0).epsilon(1e-7));
    CHECK(smp.transit_time == doctest::Approx(2.5).epsilon(1e-7));
    CHECK(smp.mean_age == doctest::Approx(2.6).epsilon(1e-7));
    // Frozen formulas agree with the live series on a constant system.
    CHECK(smp.frozen_transit == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(smp.frozen_mean_age == doctest::Approx(2.6).epsilon(1e-9));
  }
}

TEST_CASE("mean ages converge to the equilibrium ages") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  const auto series = ages::simulate_with_ages(system, 0.0, Vector{2.0, 0.5},
                                               Vector{0.0, 0.0}, 80.0, {}, {0.0, 40.0, 80.0});
  const auto& last = series.samples.back();
  CHECK(std::fabs(last.abar[0] - 2.5) <= 1e-6);
  CHECK(std::fabs(last.abar[1] - 3.0) <= 1e-6);
}

TEST_CASE("one-pool age grows like 1 - exp(-t)") {
  const auto system = scalar_system(-1.0, 1.0);
  const auto grid = core::uniform_grid(0.0, 6.0, 13);
  const auto series =
      ages::simulate_with_ages(system, 0.0, Vector{1.0}, Vector{0.0}, 6.0, {}, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double expect = 1.0 - std::exp(-grid[k]);
    CHECK(series.samples[k].abar[0] == doctest::Approx(expect).epsilon(1e-7).scale(1.0));
    // With one pool both system means collapse onto the pool age.
    CHECK(series.samples[k].transit_time ==
          doctest::Approx(series.samples[k].abar[0]).scale(1.0));
    CHECK(series.samples[k].mean_age ==
          doctest::Approx(series.samples[k].abar[0]).scale(1.0));
  }
}

TEST_CASE("simulate_with_ages validates its arguments") {
  core::CompartmentalSystem system(kTwoPoolA, Vector{1.0, 0.0});
  CHECK_THROWS_AS(ages::simulate_with_ages(system, 0.0, Vector{2.0, 0.5}, Vector{0.0, 0.0},
                                           0.0, {}, {0.0}),
                  ArgumentError);
  CHECK_THROWS_AS(ages::simulate_with_ages(system, 0.0, Vector{2.0}, Vector{0.0, 0.0}, 1.0,
                                           {}, {0.0, 1.0}),
                  ArgumentError);
  CHECK_THROWS_AS(ages::simulate_with_ages(system, 0.0, Vector{2.0, 0.5}, Vector{-1.0, 0.0},
                                           1.0, {}, {0.0, 1.0}),
                  ArgumentError);
  CHECK_THROWS_AS(ages::simulate_with_ages(system, 0.0, Vector{2.0, 1e-13}, Vector{0.0, 0.0},
                                           1.0, {}, {0.0, 1.0}),
                  DegenerateMassError);
}

TEST_CASE("frozen_mean_ages_at uses the instantaneous system") {
  Matrix b(1, 1);
  b(0, 0) = -1.0;
  core::CompartmentalSystem system(b, Vector{1.0});
  system.set_matrix_forcing(
      0, 0, core::ScalarForcing::table({0.0, 10.0}, {1.0, 2.0}));
  // At t = 10 the frozen rate is -2, so the frozen age is 1/2.
  const Vector a0 = ages::frozen_mean_ages_at(system, 0.0);
  const Vector a10 = ages::frozen_mean_ages_at(system, 10.0);
  CHECK(a0[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a10[0] == doctest::Approx(0.5).epsilon(1e-12));
}

}  // TEST_SUITE
