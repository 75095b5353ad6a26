#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "compsim/core.hpp"
#include "compsim/errors.hpp"
#include "compsim/matrix.hpp"

namespace compsim::numerics {

struct SolverConfig {
  enum class Method { Rk4Fixed, Rk45Adaptive };

  Method method = Method::Rk45Adaptive;
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0;  // 0 = auto (fixed: horizon/10000, adaptive: h_max/10)
  double h_min = 1e-12;
  double h_max = 0.0;  // 0 = auto: horizon/100
  long max_steps = 5'000'000;
};

/// Right-hand side writing dy/dt into the last argument.
using OdeField = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  /// True when states were interpolated onto caller-requested times
  /// rather than reported at the accepted integration steps.
  bool dense_output = false;
};

struct TransitionMatrix {
  double t0 = 0.0;
  double t1 = 0.0;
  Matrix phi;
};

/// LU factorization with partial pivoting. A pivot below
/// 1e-13 * max|entry| raises SingularMatrixError.
class LuFactorization {
 public:
  explicit LuFactorization(Matrix a);
  Vector solve(const Vector& b) const;
  std::size_t dimension() const { return n_; }

 private:
  std::size_t n_;
  Matrix lu_;
  std::vector<std::size_t> pivots_;
};

Vector solve_linear(const Matrix& a, const Vector& b);
Matrix invert(const Matrix& a);

/// Integrates dy/dt = field(t, y) from (t0, x0) to t1 and reports the
/// accepted steps. The adaptive method keeps each component's local
/// error within atol + rtol * |y_i|, which keeps the step sequence
/// invariant under rescaling any block of the state.
Trajectory integrate_ivp(const OdeField& field, double t0, const Vector& x0,
                         double t1, const SolverConfig& cfg);

/// Same integration, sampled at the given strictly increasing times in
/// [t0, t1] via cubic Hermite interpolation between accepted steps.
/// Sampling never constrains the internal step sequence.
Trajectory integrate_ivp(const OdeField& field, double t0, const Vector& x0,
                         double t1, const SolverConfig& cfg,
                         const std::vector<double>& output_times);

/// Solves the matrix initial value problem dX/dt = B(t) X, X(t0) = I.
TransitionMatrix transition_operator(const core::CompartmentalSystem& system,
                                     double t0, double t1, const SolverConfig& cfg);

/// x* = -B^{-1} s. Writes a warning to `warn` when a component of the
/// result is not strictly positive.
Vector equilibrium(const Matrix& b, const Vector& s, std::ostream* warn = nullptr);

/// Approximates the pullback attracting solution at time t by
/// integrating the full system from the zero state at t - horizon. The
/// default horizon of 200 time units is a heuristic: without a granted
/// certificate the truncation error is unquantified. Use
/// pullback_truncation_bound for a certified bound.
Vector pullback_solution(const core::CompartmentalSystem& system, double t,
                         double horizon = 200.0, const SolverConfig& cfg = {});

/// Truncation bound exp(-gamma H) * sup|s| / gamma for the pullback
/// approximation, using a granted certificate's gamma. The input bound
/// is probed on n_probe points over the integration window.
double pullback_truncation_bound(const core::CompartmentalSystem& system,
                                 const core::StabilityCertificate& certificate,
                                 double t, double horizon, std::size_t n_probe = 64);

}  // namespace compsim::numerics
