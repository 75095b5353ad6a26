#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "compsim/errors.hpp"
#include "compsim/matrix.hpp"

namespace compsim::core {

/// Open time interval (tau, inf). tau = -inf admits the whole line.
struct TimeDomain {
  double tau = -std::numeric_limits<double>::infinity();

  bool contains(double t) const { return t > tau; }
  void require(double t) const;  // throws DomainError when t <= tau
};

/// Scalar multiplier applied to one matrix entry or one input component.
/// Either a constant, a piecewise-linear table (clamped to its endpoint
/// values outside the tabulated range), or a named function. Named
/// functions are resolved against the builtin registry when a system is
/// loaded from a file, so evaluation never consults global state.
class ScalarForcing {
 public:
  enum class Kind { Constant, Table, Function };

  ScalarForcing() : kind_(Kind::Constant), value_(1.0) {}

  static ScalarForcing constant(double value);
  /// Table times must be strictly increasing and at least one point long.
  static ScalarForcing table(Vector times, Vector values);
  static ScalarForcing function(std::string name, std::function<double(double)> fn);

  double operator()(double t) const;

  Kind kind() const { return kind_; }
  bool is_unit() const { return kind_ == Kind::Constant && value_ == 1.0; }
  double constant_value() const { return value_; }
  const Vector& table_times() const { return times_; }
  const Vector& table_values() const { return values_; }
  const std::string& name() const { return name_; }

 private:
  Kind kind_;
  double value_ = 1.0;
  Vector times_;
  Vector values_;
  std::shared_ptr<const std::function<double(double)>> fn_;
  std::string name_;
};

/// Process-wide registry for forcings referenced by name in system files.
void register_builtin_forcing(const std::string& name, std::function<double(double)> fn);
std::optional<std::function<double(double)>> find_builtin_forcing(const std::string& name);

/// Linear nonautonomous compartmental system
///
///   dx/dt = B(t) x + s(t),   B(t)_ij = base_ij * forcing_ij(t),
///                            s(t)_i  = input_i * forcing_i(t).
///
/// Configure forcings right after construction, then treat the object as
/// immutable; const access is safe to share across threads.
class CompartmentalSystem {
 public:
  CompartmentalSystem(Matrix base_matrix, Vector base_input, TimeDomain domain = {});

  void set_matrix_forcing(std::size_t i, std::size_t j, ScalarForcing f);
  void set_input_forcing(std::size_t i, ScalarForcing f);

  std::size_t dimension() const { return dim_; }
  const TimeDomain& domain() const { return domain_; }
  const Matrix& base_matrix() const { return base_; }
  const Vector& base_input() const { return input_; }
  const ScalarForcing& matrix_forcing(std::size_t i, std::size_t j) const;
  const ScalarForcing& input_forcing(std::size_t i) const;

  /// Writes B(t) and s(t) into the given buffers (resized as needed).
  void evaluate_into(double t, Matrix& b, Vector& s) const;
  std::pair<Matrix, Vector> evaluate(double t) const;

 private:
  std::size_t dim_;
  Matrix base_;
  Vector input_;
  std::vector<ScalarForcing> matrix_forcing_;  // row-major d*d
  std::vector<ScalarForcing> input_forcing_;   // d
  TimeDomain domain_;
};

enum class Condition {
  DiagonalNegative,        // b_ii(t) < 0
  OffDiagonalNonnegative,  // b_ij(t) >= 0, i != j
  ColumnSumNonpositive,    // sum_i b_ij(t) <= 0
  InputNonnegative,        // s_i(t) >= 0
  RowSumDominance,         // block row sums <= -delta
  ColumnSumDominance,      // block column sums <= -delta
  MeanAgeInput,            // s_i(t) >= delta on the first block
  MeanAgeFeed,             // uniform feed >= delta from an earlier block
};

/// Stable identifier used in reports and CLI output.
const char* condition_id(Condition c);

struct Violation {
  Condition condition;
  int pool_i = -1;  // 1-based pool/row index
  int pool_j = -1;  // 1-based column index when meaningful, else -1
  double time = 0.0;
  double value = 0.0;  // observed value that broke the condition
};

struct ComplianceReport {
  std::vector<Violation> violations;
  bool compliant() const { return violations.empty(); }
};

/// Ordered partition of the pools into contiguous blocks such that B(t)
/// is lower block triangular at every sample used for detection.
struct BlockStructure {
  std::vector<int> sizes;     // block sizes, in pool order
  std::vector<int> block_of;  // pool -> block, 0-based
  int count() const { return static_cast<int>(sizes.size()); }
  int block_start(int block) const;
};

struct FailedCondition {
  Condition condition;
  int block = -1;  // 1-based block index
  int index = -1;  // 1-based pool index of the offending row/column
  double time = 0.0;
  double value = 0.0;
};

struct DominanceCheck {
  bool granted = false;
  double delta = 0.0;  // largest uniform margin found (may be <= 0)
  std::optional<FailedCondition> failed;
};

/// Exponential stability certificate. When granted, every solution of
/// dx/dt = B(t) x contracts like exp(-gamma (t - t0)) with gamma = delta;
/// the prefactor of the bound is not computed, only its existence is
/// certified. Refusal is a value, not an error.
struct StabilityCertificate {
  bool granted = false;
  double delta = 0.0;
  double gamma = 0.0;
  std::optional<double> decay_prefactor;  // never computed here
  std::optional<FailedCondition> failed;
  /// Same dominance test on column sums. The compartmental sign
  /// conditions constrain columns, the certified test constrains rows;
  /// the column result is reported for diagnosis only.
  DominanceCheck column_advisory;
};

/// Checks the compartmental sign conditions at every sample time:
/// negative diagonal, nonnegative off-diagonal entries, nonpositive
/// column sums, nonnegative inputs. Empty sample list is an error.
ComplianceReport check_compartmental(const CompartmentalSystem& system,
                                     const std::vector<double>& sample_times);

/// Finest ordered partition keeping B(t) lower block triangular at all
/// samples. Entries are treated as structurally nonzero when they are
/// nonzero at any sample, so adding samples can only coarsen the result.
BlockStructure detect_blocks(const CompartmentalSystem& system,
                             const std::vector<double>& sample_times);

/// Row-dominance certificate over the diagonal blocks: at every sample,
/// each diagonal block must have negative diagonal, nonnegative
/// off-diagonal entries, and row sums <= -delta for a uniform delta > 0.
StabilityCertificate certify_stability(const CompartmentalSystem& system,
                                       const BlockStructure& blocks,
                                       const std::vector<double>& sample_times);

/// Conditions for the mean-age system to inherit exponential stability:
/// every first-block pool needs input s_i(t) >= delta at all samples; a
/// pool in a later block passes with either uniform input >= delta or a
/// uniform feed b_ij(t) >= delta from some pool j in a strictly earlier
/// block. Feeds from inside the pool's own block do not count; they stay
/// inside the diagonal block and cannot produce dominance there.
ComplianceReport check_mean_age_stability(const CompartmentalSystem& system,
                                          const BlockStructure& blocks,
                                          const std::vector<double>& sample_times,
                                          double delta);

/// n >= 2 gives n points spaced evenly over [t0, t1] inclusive.
std::vector<double> uniform_grid(double t0, double t1, std::size_t n);

}  // namespace compsim::core
