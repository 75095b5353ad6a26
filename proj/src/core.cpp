#include "compsim/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace compsim::core {

namespace {

// Margin for sums that are zero in exact arithmetic but accumulate
// rounding, e.g. columns whose entries cancel exactly.
double sum_tolerance(const Matrix& b) { return 1e-12 * (1.0 + max_abs(b)); }

// A dominance margin must clear this floor before a certificate is
// granted; boundary cases (margin 0) are refused.
constexpr double kDeltaFloor = 1e-12;

std::mutex g_registry_mutex;
std::map<std::string, std::function<double(double)>>& registry() {
  static std::map<std::string, std::function<double(double)>> r;
  return r;
}

}  // namespace

void TimeDomain::require(double t) const {
  if (!contains(t)) {
    std::ostringstream msg;
    msg << "time " << t << " outside the domain (" << tau << ", inf)";
    throw DomainError(msg.str());
  }
}

ScalarForcing ScalarForcing::constant(double value) {
  ScalarForcing f;
  f.kind_ = Kind::Constant;
  f.value_ = value;
  return f;
}

ScalarForcing ScalarForcing::table(Vector times, Vector values) {
  if (times.empty() || times.size() != values.size())
    throw ConfigError("forcing table needs equally many times and values, at least one");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1]))
      throw ConfigError("forcing table times must be strictly increasing");
  ScalarForcing f;
  f.kind_ = Kind::Table;
  f.times_ = std::move(times);
  f.values_ = std::move(values);
  return f;
}

ScalarForcing ScalarForcing::function(std::string name, std::function<double(double)> fn) {
  if (!fn) throw ConfigError("forcing function '" + name + "' is empty");
  ScalarForcing f;
  f.kind_ = Kind::Function;
  f.name_ = std::move(name);
  f.fn_ = std::make_shared<const std::function<double(double)>>(std::move(fn));
  return f;
}

double ScalarForcing::operator()(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return value_;
    case Kind::Table: {
      if (t <= times_.front()) return values_.front();
      if (t >= times_.back()) return values_.back();
      auto it = std::upper_bound(times_.begin(), times_.end(), t);
      std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
      double u = (t - times_[k]) / (times_[k + 1] - times_[k]);
      return values_[k] + u * (values_[k + 1] - values_[k]);
    }
    case Kind::Function:
      return (*fn_)(t);
  }
  return 1.0;  // unreachable
}

void register_builtin_forcing(const std::string& name, std::function<double(double)> fn) {
  if (!fn) throw ConfigError("builtin forcing '" + name + "' is empty");
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  registry()[name] = std::move(fn);
}

std::optional<std::function<double(double)>> find_builtin_forcing(const std::string& name) {
  std::lock_guard<std::mutex> lock(g_registry_mutex);
  auto it = registry().find(name);
  if (it == registry().end()) return std::nullopt;
  return it->second;
}

CompartmentalSystem::CompartmentalSystem(Matrix base_matrix, Vector base_input,
                                         TimeDomain domain)
    : dim_(base_matrix.rows()),
      base_(std::move(base_matrix)),
      input_(std::move(base_input)),
      matrix_forcing_(dim_ * dim_),
      input_forcing_(dim_),
      domain_(domain) {
  if (!base_.square()) throw ArgumentError("base matrix must be square and nonempty");
  if (input_.size() != dim_)
    throw ArgumentError("base input length must match the matrix dimension");
}

void CompartmentalSystem::set_matrix_forcing(std::size_t i, std::size_t j, ScalarForcing f) {
  if (i >= dim_ || j >= dim_) throw ArgumentError("matrix forcing index out of range");
  matrix_forcing_[i * dim_ + j] = std::move(f);
}

void CompartmentalSystem::set_input_forcing(std::size_t i, ScalarForcing f) {
  if (i >= dim_) throw ArgumentError("input forcing index out of range");
  input_forcing_[i] = std::move(f);
}

const ScalarForcing& CompartmentalSystem::matrix_forcing(std::size_t i, std::size_t j) const {
  if (i >= dim_ || j >= dim_) throw ArgumentError("matrix forcing index out of range");
  return matrix_forcing_[i * dim_ + j];
}

const ScalarForcing& CompartmentalSystem::input_forcing(std::size_t i) const {
  if (i >= dim_) throw ArgumentError("input forcing index out of range");
  return input_forcing_[i];
}

void CompartmentalSystem::evaluate_into(double t, Matrix& b, Vector& s) const {
  domain_.require(t);
  if (b.rows() != dim_ || b.cols() != dim_) b = Matrix(dim_, dim_);
  s.resize(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      const ScalarForcing& f = matrix_forcing_[i * dim_ + j];
      b(i, j) = f.is_unit() ? base_(i, j) : base_(i, j) * f(t);
    }
    const ScalarForcing& g = input_forcing_[i];
    s[i] = g.is_unit() ? input_[i] : input_[i] * g(t);
  }
}

std::pair<Matrix, Vector> CompartmentalSystem::evaluate(double t) const {
  Matrix b;
  Vector s;
  evaluate_into(t, b, s);
  return {std::move(b), std::move(s)};
}

const char* condition_id(Condition c) {
  switch (c) {
    case Condition::DiagonalNegative: return "diagonal-negative";
    case Condition::OffDiagonalNonnegative: return "offdiagonal-nonnegative";
    case Condition::ColumnSumNonpositive: return "column-sum-nonpositive";
    case Condition::InputNonnegative: return "input-nonnegative";
    case Condition::RowSumDominance: return "row-sum-dominance";
    case Condition::ColumnSumDominance: return "column-sum-dominance";
    case Condition::MeanAgeInput: return "mean-age-input";
    case Condition::MeanAgeFeed: return "mean-age-feed";
  }
  return "unknown";
}

int BlockStructure::block_start(int block) const {
  int start = 0;
  for (int n = 0; n < block; ++n) start += sizes[static_cast<std::size_t>(n)];
  return start;
}

ComplianceReport check_compartmental(const CompartmentalSystem& system,
                                     const std::vector<double>& sample_times) {
  if (sample_times.empty())
    throw ArgumentError("check_compartmental: sample time list is empty");

  ComplianceReport report;
  const std::size_t d = system.dimension();
  Matrix b;
  Vector s;
  for (double t : sample_times) {
    system.evaluate_into(t, b, s);
    const double tol = sum_tolerance(b);
    for (std::size_t i = 0; i < d; ++i) {
      if (!(b(i, i) < 0.0))
        report.violations.push_back({Condition::DiagonalNegative, static_cast<int>(i) + 1,
                                     static_cast<int>(i) + 1, t, b(i, i)});
      for (std::size_t j = 0; j < d; ++j) {
        if (i != j && b(i, j) < -tol)
          report.violations.push_back({Condition::OffDiagonalNonnegative,
                                       static_cast<int>(i) + 1, static_cast<int>(j) + 1, t,
                                       b(i, j)});
      }
      if (s[i] < -tol)
        report.violations.push_back(
            {Condition::InputNonnegative, static_cast<int>(i) + 1, -1, t, s[i]});
    }
    for (std::size_t j = 0; j < d; ++j) {
      double col = 0.0;
      for (std::size_t i = 0; i < d; ++i) col += b(i, j);
      if (col > tol)
        report.violations.push_back(
            {Condition::ColumnSumNonpositive, -1, static_cast<int>(j) + 1, t, col});
    }
  }
  return report;
}

BlockStructure detect_blocks(const CompartmentalSystem& system,
                             const std::vector<double>& sample_times) {
  if (sample_times.empty()) throw ArgumentError("detect_blocks: sample time list is empty");

  const std::size_t d = system.dimension();
  // Rightmost structurally nonzero column per row, over all samples.
  std::vector<std::size_t> rmax(d);
  for (std::size_t i = 0; i < d; ++i) rmax[i] = i;
  Matrix b;
  Vector s;
  for (double t : sample_times) {
    system.evaluate_into(t, b, s);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = d; j-- > rmax[i] + 1;)
        if (b(i, j) != 0.0) {
          rmax[i] = j;
          break;
        }
  }

  // A block may end after pool k only when no row at or before k
  // reaches past column k.
  BlockStructure blocks;
  blocks.block_of.resize(d);
  std::size_t start = 0;
  std::size_t reach = 0;
  for (std::size_t k = 0; k < d; ++k) {
    reach = std::max(reach, rmax[k]);
    if (reach <= k) {
      blocks.sizes.push_back(static_cast<int>(k - start + 1));
      for (std::size_t i = start; i <= k; ++i)
        blocks.block_of[i] = static_cast<int>(blocks.sizes.size()) - 1;
      start = k + 1;
    }
  }
  return blocks;
}

namespace {

DominanceCheck dominance_check(const CompartmentalSystem& system, const BlockStructure& blocks,
                               const std::vector<double>& sample_times, bool rows) {
  DominanceCheck check;
  Matrix b;
  Vector s;
  double worst = -std::numeric_limits<double>::infinity();
  FailedCondition worst_at{};

  for (double t : sample_times) {
    system.evaluate_into(t, b, s);
    int lo = 0;
    for (int n = 0; n < blocks.count(); ++n) {
      const int size = blocks.sizes[static_cast<std::size_t>(n)];
      const int hi = lo + size;
      for (int i = lo; i < hi; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        if (!(b(si, si) < 0.0)) {
          check.failed = FailedCondition{Condition::DiagonalNegative, n + 1, i + 1, t, b(si, si)};
          return check;
        }
        for (int j = lo; j < hi; ++j) {
          const std::size_t sj = static_cast<std::size_t>(j);
          if (i != j && b(si, sj) < 0.0) {
            check.failed =
                FailedCondition{Condition::OffDiagonalNonnegative, n + 1, i + 1, t, b(si, sj)};
            return check;
          }
        }
      }
      for (int i = lo; i < hi; ++i) {
        double acc = 0.0;
        for (int j = lo; j < hi; ++j)
          acc += rows ? b(static_cast<std::size_t>(i), static_cast<std::size_t>(j))
                      : b(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
        if (acc > worst) {
          worst = acc;
          worst_at = FailedCondition{
              rows ? Condition::RowSumDominance : Condition::ColumnSumDominance, n + 1, i + 1, t,
              acc};
        }
      }
      lo = hi;
    }
  }

  check.delta = -worst;
  if (check.delta > kDeltaFloor) {
    check.granted = true;
  } else {
    check.failed = worst_at;
  }
  return check;
}

}  // namespace

StabilityCertificate certify_stability(const CompartmentalSystem& system,
                                       const BlockStructure& blocks,
                                       const std::vector<double>& sample_times) {
  if (sample_times.empty())
    throw ArgumentError("certify_stability: sample time list is empty");
  if (blocks.block_of.size() != system.dimension())
    throw ArgumentError("certify_stability: block structure does not match the system");

  StabilityCertificate cert;
  DominanceCheck row = dominance_check(system, blocks, sample_times, /*rows=*/true);
  cert.granted = row.granted;
  cert.delta = row.delta;
  cert.gamma = row.granted ? row.delta : 0.0;
  cert.failed = row.failed;
  cert.column_advisory = dominance_check(system, blocks, sample_times, /*rows=*/false);
  return cert;
}

ComplianceReport check_mean_age_stability(const CompartmentalSystem& system,
                                          const BlockStructure& blocks,
                                          const std::vector<double>& sample_times,
                                          double delta) {
  if (sample_times.empty())
    throw ArgumentError("check_mean_age_stability: sample time list is empty");
  if (!(delta > 0.0)) throw ArgumentError("check_mean_age_stability: delta must be positive");
  if (blocks.block_of.size() != system.dimension())
    throw ArgumentError("check_mean_age_stability: block structure does not match the system");

  const std::size_t d = system.dimension();
  // Uniform minima over the samples: a witness has to hold at all of them.
  Vector min_s(d, std::numeric_limits<double>::infinity());
  std::vector<double> min_t(d, sample_times.front());
  Matrix min_b(d, d, std::numeric_limits<double>::infinity());
  Matrix b;
  Vector s;
  for (double t : sample_times) {
    system.evaluate_into(t, b, s);
    for (std::size_t i = 0; i < d; ++i) {
      if (s[i] < min_s[i]) {
        min_s[i] = s[i];
        min_t[i] = t;
      }
      for (std::size_t j = 0; j < d; ++j) min_b(i, j) = std::min(min_b(i, j), b(i, j));
    }
  }

  ComplianceReport report;
  for (std::size_t i = 0; i < d; ++i) {
    if (min_s[i] >= delta) continue;  // strong external input always suffices
    const int block = blocks.block_of[i];
    if (block == 0) {
      report.violations.push_back(
          {Condition::MeanAgeInput, static_cast<int>(i) + 1, -1, min_t[i], min_s[i]});
      continue;
    }
    // Best uniform feed from a strictly earlier block. Feeds from inside
    // pool i's own block stay inside the diagonal block of the mean-age
    // matrix and cannot establish dominance there.
    const int lo = blocks.block_start(block);
    double best = -std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (int j = 0; j < lo; ++j) {
      if (min_b(i, static_cast<std::size_t>(j)) > best) {
        best = min_b(i, static_cast<std::size_t>(j));
        best_j = j;
      }
    }
    if (best >= delta) continue;
    report.violations.push_back({Condition::MeanAgeFeed, static_cast<int>(i) + 1,
                                 best_j >= 0 ? best_j + 1 : -1, sample_times.front(),
                                 best_j >= 0 ? best : 0.0});
  }
  return report;
}

std::vector<double> uniform_grid(double t0, double t1, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_grid: need at least one point");
  if (n == 1) return {t0};
  if (!(t1 > t0)) throw ArgumentError("uniform_grid: t1 must exceed t0");
  std::vector<double> grid(n);
  const double h = (t1 - t0) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) grid[k] = t0 + h * static_cast<double>(k);
  grid.back() = t1;
  return grid;
}

}  // namespace compsim::core
