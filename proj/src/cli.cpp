#include "compsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "compsim/ages.hpp"
#include "compsim/casa.hpp"
#include "compsim/core.hpp"
#include "compsim/errors.hpp"
#include "compsim/matrix.hpp"
#include "compsim/numerics.hpp"
#include "compsim/system_io.hpp"
#include "compsim/version.hpp"

namespace compsim::cli {

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string vec_text(const Vector& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ",";
    s += fmt12(v[i]);
  }
  return s + ")";
}

std::string matrix_text(const Matrix& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i > 0) s += ",";
    s += "(";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) s += ",";
      s += fmt12(m(i, j));
    }
    s += ")";
  }
  return s + ")";
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read input file for hashing: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(buffer.str())));
  return buf;
}

// Shared integration settings exposed by the simulating subcommands.
struct SolverFlags {
  std::string method = "rk45";
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_init = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--method", method, "integration method (default rk45)")
        ->check(CLI::IsMember({"rk45", "rk4"}));
    cmd->add_option("--rtol", rtol, "relative tolerance (rk45, default 1e-8)");
    cmd->add_option("--atol", atol, "absolute tolerance (rk45, default 1e-10)");
    cmd->add_option("--h-init", h_init,
                    "initial step (rk45) or fixed step (rk4); 0 picks automatically");
  }

  numerics::SolverConfig config() const {
    numerics::SolverConfig cfg;
    cfg.method = method == "rk4" ? numerics::SolverConfig::Method::Rk4Fixed
                                 : numerics::SolverConfig::Method::Rk45Adaptive;
    cfg.rtol = rtol;
    cfg.atol = atol;
    cfg.h_init = h_init;
    return cfg;
  }

  json echo() const {
    return {{"method", method},
            {"rtol", rtol},
            {"atol", atol},
            {"h_init", h_init == 0.0 ? json(nullptr) : json(h_init)}};
  }
};

std::vector<double> sample_times(double t0, double t1, double dt) {
  if (!(dt > 0.0)) throw ArgumentError("output spacing must be positive");
  const double span = t1 - t0;
  if (span / dt > 5e6)
    throw ArgumentError("output spacing asks for more than 5,000,000 samples");
  std::vector<double> ts;
  for (std::size_t k = 0; k * dt < span * (1.0 - 1e-12); ++k) ts.push_back(t0 + k * dt);
  ts.push_back(t1);
  return ts;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write output file: " + path);
  return f;
}

void finish_output(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f.good()) throw ConfigError("failed while writing output file: " + path);
}

void write_age_series_csv(const std::string& path, const ages::AgeTimeSeries& series) {
  auto f = open_output(path);
  const std::size_t d = series.samples.front().x.size();
  f << "t";
  for (std::size_t i = 1; i <= d; ++i) f << ",x_" << i;
  for (std::size_t i = 1; i <= d; ++i) f << ",abar_" << i;
  f << ",total_x,R_t,M_t,R_frozen,M_frozen\n";
  for (const auto& sample : series.samples) {
    f << fmt17(sample.t);
    for (double v : sample.x) f << "," << fmt17(v);
    for (double v : sample.abar) f << "," << fmt17(v);
    f << "," << fmt17(sum(sample.x)) << "," << fmt17(sample.transit_time) << ","
      << fmt17(sample.mean_age) << "," << fmt17(sample.frozen_transit) << ","
      << fmt17(sample.frozen_mean_age) << "\n";
  }
  finish_output(f, path);
}

void write_mass_csv(const std::string& path, const numerics::Trajectory& traj) {
  auto f = open_output(path);
  const std::size_t d = traj.states.front().size();
  f << "t";
  for (std::size_t i = 1; i <= d; ++i) f << ",x_" << i;
  f << ",total_x\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    f << fmt17(traj.times[k]);
    for (double v : traj.states[k]) f << "," << fmt17(v);
    f << "," << fmt17(sum(traj.states[k])) << "\n";
  }
  finish_output(f, path);
}

void write_manifest(const std::string& output_path, const std::vector<std::string>& args,
                    const json& config, const std::optional<std::string>& input_path) {
  json m;
  m["command"] = args;
  m["config"] = config;
  if (input_path)
    m["input"] = {{"path", *input_path}, {"fnv1a64", file_hash_hex(*input_path)}};
  else
    m["input"] = nullptr;
  m["output"] = output_path;
  m["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  const std::string path = output_path + ".manifest.json";
  auto f = open_output(path);
  f << m.dump(2) << "\n";
  finish_output(f, path);
}

void print_dominance(std::ostream& out, const char* label, bool granted, double delta,
                     std::optional<double> gamma, const std::optional<core::FailedCondition>& failed) {
  out << label << ": ";
  if (granted) {
    out << "granted delta=" << fmt12(delta);
    if (gamma) out << " gamma=" << fmt12(*gamma);
    out << "\n";
    return;
  }
  out << "refused";
  if (failed)
    out << " " << core::condition_id(failed->condition) << " block=" << failed->block
        << " pool=" << failed->index << " t=" << fmt12(failed->time)
        << " value=" << fmt12(failed->value);
  out << "\n";
}

int run_validate(const std::string& path, std::size_t samples, std::optional<double> t0_opt,
                 std::optional<double> t1_opt, std::ostream& out) {
  const auto loaded = io::load_system_file(path);
  const auto& system = loaded.system;
  const double tau = system.domain().tau;
  const double t0 =
      t0_opt ? *t0_opt : (std::isinf(tau) ? 0.0 : tau + 1e-9 * std::max(1.0, std::fabs(tau)));
  const double t1 = t1_opt ? *t1_opt : t0 + 100.0;
  if (!(t1 > t0)) throw ArgumentError("validate: the sample window must end after it starts");
  if (samples < 2) throw ArgumentError("validate: need at least 2 samples");
  system.domain().require(t0);
  system.domain().require(t1);

  const auto grid = core::uniform_grid(t0, t1, samples);
  const auto report = core::check_compartmental(system, grid);
  const auto blocks = core::detect_blocks(system, grid);
  const auto cert = core::certify_stability(system, blocks, grid);

  out << "system: " << path << "\n";
  out << "pools: " << system.dimension() << "\n";
  out << "samples: " << samples << " over [" << fmt12(t0) << ", " << fmt12(t1) << "]\n";
  if (report.compliant()) {
    out << "compliance: ok\n";
  } else {
    out << "compliance: " << report.violations.size() << " violation(s)\n";
    for (const auto& v : report.violations) {
      out << "  " << core::condition_id(v.condition) << " pool=" << v.pool_i;
      if (v.pool_j > 0) out << " source=" << v.pool_j;
      out << " t=" << fmt12(v.time) << " value=" << fmt12(v.value) << "\n";
    }
  }
  out << "blocks: " << blocks.count() << " (";
  for (std::size_t i = 0; i < blocks.sizes.size(); ++i) {
    if (i > 0) out << ",";
    out << blocks.sizes[i];
  }
  out << ")\n";
  print_dominance(out, "row certificate", cert.granted, cert.delta,
                  cert.granted ? std::optional<double>(cert.gamma) : std::nullopt, cert.failed);
  print_dominance(out, "column advisory", cert.column_advisory.granted,
                  cert.column_advisory.delta, std::nullopt, cert.column_advisory.failed);
  return report.compliant() ? kExitOk : kExitValidation;
}

struct SimulateFlags {
  std::string file;
  double t0 = 0.0;
  double t1 = 0.0;
  double dt_out = 0.0;  // 0 = auto: (t1 - t0) / 500
  std::string init = "auto";
  bool ages = false;
  SolverFlags solver;
  std::string output;
};

int run_simulate(const SimulateFlags& flags, const std::vector<std::string>& args,
                 std::ostream& out, std::ostream& err) {
  const auto loaded = io::load_system_file(flags.file);
  const auto& system = loaded.system;
  if (!(flags.t1 > flags.t0))
    throw ArgumentError("simulate: --t1 must be greater than --t0");
  system.domain().require(flags.t0);
  system.domain().require(flags.t1);

  const double dt = flags.dt_out > 0.0 ? flags.dt_out : (flags.t1 - flags.t0) / 500.0;
  const auto ts = sample_times(flags.t0, flags.t1, dt);

  const bool from_file = flags.init == "file" || (flags.init == "auto" && loaded.x0.has_value());
  Vector x0;
  if (from_file) {
    if (!loaded.x0)
      throw ConfigError("simulate: --init file, but the system definition carries no x0");
    x0 = *loaded.x0;
  } else {
    const auto [b0, s0] = system.evaluate(flags.t0);
    x0 = numerics::equilibrium(b0, s0, &err);
  }

  const auto cfg = flags.solver.config();
  json config = {{"t0", flags.t0},
                 {"t1", flags.t1},
                 {"dt_out", dt},
                 {"init", from_file ? "file" : "equilibrium"},
                 {"ages", flags.ages},
                 {"solver", flags.solver.echo()}};

  if (flags.ages) {
    Vector abar0;
    if (from_file && loaded.abar0)
      abar0 = *loaded.abar0;
    else
      abar0 = ages::frozen_mean_ages_at(system, flags.t0);
    const auto series = ages::simulate_with_ages(system, flags.t0, x0, abar0, flags.t1, cfg, ts);
    write_age_series_csv(flags.output, series);
  } else {
    const std::size_t d = system.dimension();
    Matrix b(d, d);
    Vector s(d);
    const numerics::OdeField field = [&system, &b, &s, d](double t, const Vector& y,
                                                          Vector& dydt) {
      system.evaluate_into(t, b, s);
      dydt.assign(d, 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        double acc = s[i];
        for (std::size_t j = 0; j < d; ++j) acc += b(i, j) * y[j];
        dydt[i] = acc;
      }
    };
    const auto traj = numerics::integrate_ivp(field, flags.t0, x0, flags.t1, cfg, ts);
    write_mass_csv(flags.output, traj);
  }
  write_manifest(flags.output, args, config, flags.file);
  out << "wrote " << flags.output << " (" << ts.size() << " samples)\n";
  return kExitOk;
}

int run_autonomous(const std::string& path, double at, std::ostream& out) {
  const auto loaded = io::load_system_file(path);
  loaded.system.domain().require(at);
  const auto [b, s] = loaded.system.evaluate(at);
  const auto summary = ages::autonomous_summary(b, s);
  out << "R=" << fmt12(summary.transit_time) << "\n";
  out << "M=" << fmt12(summary.mean_age) << "\n";
  out << "U=" << fmt12(summary.turnover) << "\n";
  out << "r=" << vec_text(summary.r) << "\n";
  out << "x_star=" << vec_text(summary.x_star) << "\n";
  out << "abar_star=" << vec_text(summary.abar_star) << "\n";
  out << "beta=" << vec_text(summary.beta) << "\n";
  out << "eta=" << vec_text(summary.eta) << "\n";
  out << "p=" << matrix_text(summary.p) << "\n";
  return kExitOk;
}

struct CasaFlags {
  double t_end = 0.0;
  std::string co2 = "logistic";
  casa::CasaParams params;
  double dt_out = 1.0;
  SolverFlags solver;
  std::string output;
};

int run_casa(const CasaFlags& flags, const std::vector<std::string>& args, std::ostream& out) {
  casa::CasaParams p = flags.params;
  p.co2_model = flags.co2 == "verbatim" ? casa::Co2Model::Verbatim : casa::Co2Model::Logistic;
  const auto series = casa::run_scenario(p, flags.t_end, flags.solver.config(), flags.dt_out);
  write_age_series_csv(flags.output, series);
  const json config = {{"t_end", flags.t_end}, {"co2", flags.co2},
                       {"xi_b", p.xi_b},       {"s0", p.s0},
                       {"b89", p.b89},         {"dt_out", flags.dt_out},
                       {"solver", flags.solver.echo()}};
  write_manifest(flags.output, args, config, std::nullopt);
  out << "wrote " << flags.output << " (" << series.samples.size() << " samples)\n";
  return kExitOk;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nonautonomous compartmental systems: validation, simulation, ages", "compsim"};
  app.require_subcommand(1);

  auto* validate_cmd =
      app.add_subcommand("validate", "check sign conditions, blocks, and the stability certificate");
  std::string validate_file;
  std::size_t validate_samples = 512;
  std::optional<double> validate_t0, validate_t1;
  validate_cmd->add_option("file", validate_file, "system definition JSON")->required();
  validate_cmd->add_option("--samples", validate_samples, "sample count on the checking grid");
  validate_cmd->add_option("--t0", validate_t0, "start of the checking window");
  validate_cmd->add_option("--t1", validate_t1, "end of the checking window (default t0 + 100)");

  auto* simulate_cmd = app.add_subcommand("simulate", "integrate a system and write a CSV series");
  SimulateFlags sim;
  simulate_cmd->add_option("file", sim.file, "system definition JSON")->required();
  simulate_cmd->add_option("--t0", sim.t0, "start time")->required();
  simulate_cmd->add_option("--t1", sim.t1, "end time")->required();
  simulate_cmd->add_option("--dt-out", sim.dt_out, "output spacing (default (t1-t0)/500)");
  simulate_cmd->add_option("--init", sim.init, "initial state source (default: file when it has x0)")
      ->check(CLI::IsMember({"auto", "equilibrium", "file"}));
  simulate_cmd->add_flag("--ages", sim.ages, "integrate mean ages and append age columns");
  sim.solver.attach(simulate_cmd);
  simulate_cmd->add_option("-o,--output", sim.output, "output CSV path")->required();

  auto* autonomous_cmd =
      app.add_subcommand("autonomous", "equilibrium quantities of the system frozen at a time");
  std::string autonomous_file;
  double autonomous_at = 0.0;
  autonomous_cmd->add_option("file", autonomous_file, "system definition JSON")->required();
  autonomous_cmd->add_option("--at", autonomous_at, "freeze time")->required();

  auto* casa_cmd = app.add_subcommand("casa", "run the nine-pool terrestrial carbon scenario");
  CasaFlags casa_flags;
  casa_cmd->add_option("--t-end", casa_flags.t_end, "years to simulate")->required();
  casa_cmd->add_option("--co2", casa_flags.co2, "CO2 curve (default logistic)")
      ->check(CLI::IsMember({"verbatim", "logistic"}));
  casa_cmd->add_option("--xi-b", casa_flags.params.xi_b, "decomposition Q10 base (default 2)");
  casa_cmd->add_option("--s0", casa_flags.params.s0, "input scale in PgC/yr (default 120)");
  casa_cmd->add_option("--b89", casa_flags.params.b89, "slow-to-soil cross rate (default 0)");
  casa_cmd->add_option("--dt-out", casa_flags.dt_out, "output spacing in years (default 1)");
  casa_flags.solver.attach(casa_cmd);
  casa_cmd->add_option("-o,--output", casa_flags.output, "output CSV path")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("compsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (validate_cmd->parsed())
      return run_validate(validate_file, validate_samples, validate_t0, validate_t1, out);
    if (simulate_cmd->parsed()) return run_simulate(sim, args, out, err);
    if (autonomous_cmd->parsed()) return run_autonomous(autonomous_file, autonomous_at, out);
    if (casa_cmd->parsed()) return run_casa(casa_flags, args, out);
  } catch (const NumericsError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerics;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace compsim::cli
