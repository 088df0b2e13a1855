#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qsync/experiment.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::vector<double> omegas;
  std::string preset;
  int n = 0;
  int i_size = 1;
  int cluster_j = 1;
  double mass = 2.0;
  double kappa = 0.0;
  double lo = 0.0, hi = 0.0;
  int points = 0;
  double dt = 0.0, t_final = 0.0, abs_tol = 0.0, rel_tol = 0.0;
  int record_every = 0;
  std::string method;
  std::uint64_t seed = 1;
  double epsilon = 0.005;
  std::string output;
  int threads = 0;
  std::string potential;
  double omega_trap = 0.2;
  int grid_points = 1024;
  double half_width = 20.0;
  double dt_factor = 0.5;
  double oracle_t_final = 10.0;
  int snapshots = 5;
};

// Every subcommand takes the same option set; validate_config rejects the
// combinations that make no sense for it.
std::map<std::string, CLI::Option*> add_options(CLI::App* sub, Flags& f) {
  std::map<std::string, CLI::Option*> opts;
  opts["config"] = sub->add_option("--config", f.config_path,
                                   "JSON config file; flags override it");
  opts["omegas"] = sub->add_option("--omegas", f.omegas,
                                   "comma-separated natural frequencies")
                       ->delimiter(',');
  opts["preset"] = sub->add_option(
      "--preset", f.preset,
      "two-cluster | symmetric-triple | full-sync | bipolar | incoherent | "
      "trivial");
  opts["n"] = sub->add_option("--n", f.n, "preset system size");
  opts["i-size"] =
      sub->add_option("--i-size", f.i_size, "bipolar flipped-group size");
  opts["j"] = sub->add_option("--j", f.cluster_j, "two-cluster first group size");
  opts["mass"] = sub->add_option("--mass", f.mass, "preset total |omega| mass");
  opts["kappa"] = sub->add_option("--kappa", f.kappa, "coupling strength");
  opts["kappa-lo"] = sub->add_option("--kappa-lo", f.lo, "sweep range start");
  opts["kappa-hi"] = sub->add_option("--kappa-hi", f.hi, "sweep range end");
  opts["kappa-points"] =
      sub->add_option("--kappa-points", f.points, "sweep point count");
  opts["dt"] = sub->add_option("--dt", f.dt, "integrator step");
  opts["t-final"] = sub->add_option("--t-final", f.t_final, "integration horizon");
  opts["abs-tol"] = sub->add_option("--abs-tol", f.abs_tol, "rk45 absolute tolerance");
  opts["rel-tol"] = sub->add_option("--rel-tol", f.rel_tol, "rk45 relative tolerance");
  opts["record-every"] =
      sub->add_option("--record-every", f.record_every, "recording stride");
  opts["method"] = sub->add_option("--method", f.method, "rk4 | rk45");
  opts["seed"] = sub->add_option("--seed", f.seed, "random state seed");
  opts["epsilon"] =
      sub->add_option("--epsilon", f.epsilon, "perturbation amplitude off a lock");
  opts["output"] = sub->add_option("--output", f.output, "output path prefix");
  opts["threads"] = sub->add_option("--threads", f.threads, "sweep workers");
  opts["potential"] =
      sub->add_option("--potential", f.potential, "oracle potential: free | harmonic");
  opts["omega-trap"] =
      sub->add_option("--omega-trap", f.omega_trap, "harmonic trap frequency");
  opts["grid-points"] =
      sub->add_option("--grid-points", f.grid_points, "oracle grid size (power of 2)");
  opts["half-width"] =
      sub->add_option("--half-width", f.half_width, "oracle domain half-width");
  opts["dt-factor"] = sub->add_option("--dt-factor", f.dt_factor,
                                      "oracle step as a fraction of the cap");
  opts["oracle-t-final"] =
      sub->add_option("--oracle-t-final", f.oracle_t_final, "oracle horizon");
  opts["snapshots"] =
      sub->add_option("--snapshots", f.snapshots, "stored wave snapshots");
  return opts;
}

bool set(const std::map<std::string, CLI::Option*>& opts, const std::string& k) {
  return opts.at(k)->count() > 0;
}

int apply_and_run(const std::string& command, const Flags& f,
                  const std::map<std::string, CLI::Option*>& opts) {
  qsync::ExperimentConfig cfg;
  cfg.command = command;
  if (set(opts, "config")) {
    std::ifstream in(f.config_path);
    if (!in) {
      std::cerr << "config error: cannot read " << f.config_path << "\n";
      return qsync::kExitConfigError;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      qsync::apply_config_json(cfg, buf.str());
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return qsync::kExitConfigError;
    }
    cfg.command = command;  // the subcommand wins over the file
  }
  if (set(opts, "omegas")) cfg.omegas = f.omegas;
  if (set(opts, "preset")) cfg.preset = f.preset;
  if (set(opts, "n")) cfg.n = f.n;
  if (set(opts, "i-size")) cfg.i_size = f.i_size;
  if (set(opts, "j")) cfg.cluster_j = f.cluster_j;
  if (set(opts, "mass")) cfg.mass = f.mass;
  if (set(opts, "kappa")) cfg.kappa = f.kappa;
  if (set(opts, "kappa-lo") || set(opts, "kappa-hi") || set(opts, "kappa-points")) {
    qsync::SweepRange r = cfg.range.value_or(qsync::SweepRange{});
    if (set(opts, "kappa-lo")) r.lo = f.lo;
    if (set(opts, "kappa-hi")) r.hi = f.hi;
    if (set(opts, "kappa-points")) r.points = f.points;
    cfg.range = r;
  }
  if (set(opts, "dt")) cfg.solver.dt = f.dt;
  if (set(opts, "t-final")) cfg.solver.t_final = f.t_final;
  if (set(opts, "abs-tol")) cfg.solver.abs_tol = f.abs_tol;
  if (set(opts, "rel-tol")) cfg.solver.rel_tol = f.rel_tol;
  if (set(opts, "record-every")) cfg.solver.record_every = f.record_every;
  if (set(opts, "method")) cfg.solver.method = f.method;
  if (set(opts, "seed")) cfg.seed = f.seed;
  if (set(opts, "epsilon")) cfg.epsilon = f.epsilon;
  if (set(opts, "output")) cfg.output = f.output;
  if (set(opts, "threads")) cfg.threads = f.threads;
  if (set(opts, "potential")) cfg.oracle.potential = f.potential;
  if (set(opts, "omega-trap")) cfg.oracle.omega_trap = f.omega_trap;
  if (set(opts, "grid-points")) cfg.oracle.grid_points = f.grid_points;
  if (set(opts, "half-width")) cfg.oracle.half_width = f.half_width;
  if (set(opts, "dt-factor")) cfg.oracle.dt_factor = f.dt_factor;
  if (set(opts, "oracle-t-final")) cfg.oracle.t_final = f.oracle_t_final;
  if (set(opts, "snapshots")) cfg.oracle.snapshots = f.snapshots;
  return qsync::run_experiment(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "qsync: phase-locked states, stability, and wave-function cross-checks "
      "for mean-field correlation dynamics"};
  app.require_subcommand(1);

  Flags flags;
  std::map<std::string, std::map<std::string, CLI::Option*>> per_sub;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"simulate", "integrate the correlation system from a random state"},
      {"fixed-point", "solve for the phase-locked state at one coupling"},
      {"stability", "Jacobian spectrum of a locked or homogeneous state"},
      {"lyapunov", "basin certificate and measured decay of the energy"},
      {"kappa-star", "critical coupling, order parameter, opening angle"},
      {"sweep", "phase-diagram table over a coupling range"},
      {"oracle", "wave-function evolution cross-checking the correlations"},
  };
  for (const auto& [name, desc] : subs) {
    CLI::App* sub = app.add_subcommand(name, desc);
    per_sub[name] = add_options(sub, flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return qsync::kExitConfigError;
  }

  for (const auto& [name, desc] : subs) {
    (void)desc;
    if (app.got_subcommand(name)) {
      return apply_and_run(name, flags, per_sub[name]);
    }
  }
  std::cerr << "config error: a subcommand is required\n";
  return qsync::kExitConfigError;
}
