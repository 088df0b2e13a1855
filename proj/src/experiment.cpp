#include "qsync/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <thread>

#include "json.hpp"

#include "qsync/correlation_dynamics.hpp"
#include "qsync/critical_coupling.hpp"
#include "qsync/detail/rng.hpp"
#include "qsync/fixed_point.hpp"
#include "qsync/io.hpp"
#include "qsync/kuramoto.hpp"
#include "qsync/linear_stability.hpp"
#include "qsync/lyapunov.hpp"
#include "qsync/version.hpp"
#include "qsync/wave_oracle.hpp"

namespace qsync {

using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {
    "simulate", "fixed-point", "stability", "lyapunov",
    "kappa-star", "sweep", "oracle"};

const std::vector<std::string> kEnsemblePresets = {"two-cluster",
                                                   "symmetric-triple"};
const std::vector<std::string> kStatePresets = {"full-sync", "bipolar",
                                                "incoherent", "trivial"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void reject_unknown_keys(const json& j, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    if (!contains(allowed, item.key())) {
      throw std::invalid_argument("unknown config key '" + item.key() +
                                  "' in " + where);
    }
  }
}

std::string timestamp_utc() {
  std::time_t now = std::time(nullptr);
  char buf[64];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

void apply_config_json(ExperimentConfig& cfg, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config root must be an object");
  reject_unknown_keys(j, {"command", "ensemble", "kappa", "kappa_range",
                          "solver", "seed", "epsilon", "output", "threads",
                          "oracle"},
                      "config root");
  try {
    if (j.contains("command")) cfg.command = j["command"].get<std::string>();
    if (j.contains("ensemble")) {
      const json& e = j["ensemble"];
      reject_unknown_keys(e, {"omegas", "preset", "n", "i_size", "j", "mass"},
                          "ensemble");
      if (e.contains("omegas")) cfg.omegas = e["omegas"].get<std::vector<double>>();
      if (e.contains("preset")) cfg.preset = e["preset"].get<std::string>();
      if (e.contains("n")) cfg.n = e["n"].get<int>();
      if (e.contains("i_size")) cfg.i_size = e["i_size"].get<int>();
      if (e.contains("j")) cfg.cluster_j = e["j"].get<int>();
      if (e.contains("mass")) cfg.mass = e["mass"].get<double>();
    }
    if (j.contains("kappa")) cfg.kappa = j["kappa"].get<double>();
    if (j.contains("kappa_range")) {
      const json& r = j["kappa_range"];
      reject_unknown_keys(r, {"lo", "hi", "points"}, "kappa_range");
      SweepRange range;
      range.lo = r.at("lo").get<double>();
      range.hi = r.at("hi").get<double>();
      range.points = r.at("points").get<int>();
      cfg.range = range;
    }
    if (j.contains("solver")) {
      const json& s = j["solver"];
      reject_unknown_keys(s, {"dt", "t_final", "abs_tol", "rel_tol",
                              "record_every", "method"},
                          "solver");
      if (s.contains("dt")) cfg.solver.dt = s["dt"].get<double>();
      if (s.contains("t_final")) cfg.solver.t_final = s["t_final"].get<double>();
      if (s.contains("abs_tol")) cfg.solver.abs_tol = s["abs_tol"].get<double>();
      if (s.contains("rel_tol")) cfg.solver.rel_tol = s["rel_tol"].get<double>();
      if (s.contains("record_every"))
        cfg.solver.record_every = s["record_every"].get<int>();
      if (s.contains("method")) cfg.solver.method = s["method"].get<std::string>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("output")) cfg.output = j["output"].get<std::string>();
    if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
    if (j.contains("oracle")) {
      const json& o = j["oracle"];
      reject_unknown_keys(o, {"potential", "omega_trap", "grid_points",
                              "half_width", "dt_factor", "t_final", "snapshots"},
                          "oracle");
      if (o.contains("potential"))
        cfg.oracle.potential = o["potential"].get<std::string>();
      if (o.contains("omega_trap"))
        cfg.oracle.omega_trap = o["omega_trap"].get<double>();
      if (o.contains("grid_points"))
        cfg.oracle.grid_points = o["grid_points"].get<int>();
      if (o.contains("half_width"))
        cfg.oracle.half_width = o["half_width"].get<double>();
      if (o.contains("dt_factor"))
        cfg.oracle.dt_factor = o["dt_factor"].get<double>();
      if (o.contains("t_final")) cfg.oracle.t_final = o["t_final"].get<double>();
      if (o.contains("snapshots")) cfg.oracle.snapshots = o["snapshots"].get<int>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config type error: ") + e.what());
  }
}

std::string canonical_config(const ExperimentConfig& cfg) {
  json j;
  j["command"] = cfg.command;
  json e;
  e["omegas"] = cfg.omegas;
  e["preset"] = cfg.preset;
  e["n"] = cfg.n;
  e["i_size"] = cfg.i_size;
  e["j"] = cfg.cluster_j;
  e["mass"] = cfg.mass;
  j["ensemble"] = e;
  if (cfg.kappa) j["kappa"] = *cfg.kappa;
  if (cfg.range) {
    j["kappa_range"] = {{"lo", cfg.range->lo},
                        {"hi", cfg.range->hi},
                        {"points", cfg.range->points}};
  }
  json s;
  if (cfg.solver.dt) s["dt"] = *cfg.solver.dt;
  if (cfg.solver.t_final) s["t_final"] = *cfg.solver.t_final;
  if (cfg.solver.abs_tol) s["abs_tol"] = *cfg.solver.abs_tol;
  if (cfg.solver.rel_tol) s["rel_tol"] = *cfg.solver.rel_tol;
  if (cfg.solver.record_every) s["record_every"] = *cfg.solver.record_every;
  if (cfg.solver.method) s["method"] = *cfg.solver.method;
  j["solver"] = s;
  j["seed"] = cfg.seed;
  j["epsilon"] = cfg.epsilon;
  j["output"] = cfg.output;
  if (cfg.command == "oracle") {
    j["oracle"] = {{"potential", cfg.oracle.potential},
                   {"omega_trap", cfg.oracle.omega_trap},
                   {"grid_points", cfg.oracle.grid_points},
                   {"half_width", cfg.oracle.half_width},
                   {"dt_factor", cfg.oracle.dt_factor},
                   {"t_final", cfg.oracle.t_final},
                   {"snapshots", cfg.oracle.snapshots}};
  }
  return j.dump();
}

void validate_config(const ExperimentConfig& cfg) {
  if (!contains(kCommands, cfg.command)) {
    throw std::invalid_argument("unknown or missing command '" + cfg.command +
                                "'");
  }
  const bool state_preset = contains(kStatePresets, cfg.preset);
  const bool ensemble_preset = contains(kEnsemblePresets, cfg.preset);
  if (!cfg.preset.empty() && !state_preset && !ensemble_preset) {
    throw std::invalid_argument("unknown preset '" + cfg.preset + "'");
  }
  if (state_preset && cfg.command != "stability") {
    throw std::invalid_argument("preset '" + cfg.preset +
                                "' names a correlation state; only the "
                                "stability command accepts it");
  }
  if (!cfg.preset.empty() && !cfg.omegas.empty()) {
    throw std::invalid_argument("give either omegas or a preset, not both");
  }
  if (!cfg.preset.empty() && cfg.n < 2) {
    throw std::invalid_argument("presets require n >= 2");
  }
  if (cfg.range && cfg.command != "sweep") {
    throw std::invalid_argument("kappa_range is only valid with sweep");
  }
  const bool has_ensemble = !cfg.omegas.empty() || !cfg.preset.empty();
  if (!has_ensemble) {
    throw std::invalid_argument("no ensemble: give omegas or a preset");
  }
  if (cfg.command == "sweep") {
    if (!cfg.range) throw std::invalid_argument("sweep requires kappa_range");
    if (cfg.range->points < 2)
      throw std::invalid_argument("kappa_range needs at least 2 points");
    if (!(cfg.range->lo > 0.0) || !(cfg.range->hi > cfg.range->lo))
      throw std::invalid_argument("kappa_range needs 0 < lo < hi");
  } else if (cfg.command != "kappa-star") {
    const bool needs_kappa = cfg.command != "stability" || !state_preset;
    if (needs_kappa && !cfg.kappa) {
      throw std::invalid_argument(cfg.command + " requires kappa");
    }
    if (cfg.kappa && !(*cfg.kappa > 0.0)) {
      throw std::invalid_argument("kappa must be positive");
    }
  }
  if (cfg.command == "oracle") {
    if (cfg.oracle.potential != "free" && cfg.oracle.potential != "harmonic") {
      throw std::invalid_argument("oracle potential must be free or harmonic");
    }
    if (!(cfg.oracle.dt_factor > 0.0) || cfg.oracle.dt_factor > 1.0) {
      throw std::invalid_argument("oracle dt_factor must lie in (0, 1]");
    }
    if (cfg.oracle.snapshots < 2) {
      throw std::invalid_argument("oracle snapshots must be >= 2");
    }
    if (!(cfg.oracle.t_final > 0.0)) {
      throw std::invalid_argument("oracle t_final must be positive");
    }
  }
  if (!(cfg.epsilon > 0.0) || cfg.epsilon >= 1.0) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  if (cfg.threads < 0) throw std::invalid_argument("threads must be >= 0");
  if (cfg.solver.method && *cfg.solver.method != "rk4" &&
      *cfg.solver.method != "rk45") {
    throw std::invalid_argument("solver method must be rk4 or rk45");
  }
}

FrequencyEnsemble config_ensemble(const ExperimentConfig& cfg) {
  if (cfg.preset == "two-cluster") {
    return make_two_cluster_ensemble(cfg.n, cfg.cluster_j, cfg.mass);
  }
  if (cfg.preset == "symmetric-triple") {
    return make_symmetric_triple_ensemble(cfg.n, cfg.mass);
  }
  if (contains(kStatePresets, cfg.preset)) {
    return make_ensemble(std::vector<double>(cfg.n, 0.0));
  }
  return make_ensemble(cfg.omegas);
}

SolverConfig solver_for(const ExperimentConfig& cfg, double kappa) {
  double t_final = cfg.solver.t_final.value_or(10.0);
  SolverConfig s = SolverConfig::defaults_for(kappa, t_final);
  if (cfg.solver.dt) s.dt = *cfg.solver.dt;
  if (cfg.solver.abs_tol) s.abs_tol = *cfg.solver.abs_tol;
  if (cfg.solver.rel_tol) s.rel_tol = *cfg.solver.rel_tol;
  if (cfg.solver.record_every) s.record_every = *cfg.solver.record_every;
  if (cfg.solver.method) {
    s.method = (*cfg.solver.method == "rk45") ? Method::rk45 : Method::rk4;
  }
  s.validate();
  return s;
}

std::string output_prefix(const ExperimentConfig& cfg) {
  std::filesystem::path p(cfg.output);
  if (const char* dir = std::getenv("QSYNC_OUTPUT_DIR"); dir != nullptr && *dir) {
    p = std::filesystem::path(dir) / p.filename();
  }
  return p.string();
}

std::uint64_t derive_seed(std::uint64_t seed, double kappa) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &kappa, sizeof(bits));
  detail::Rng r(seed ^ (bits * 0x9e3779b97f4a7c15ULL));
  return r.next_u64();
}

CorrelationState random_unit_gram(int N, int dim, std::uint64_t seed) {
  if (N < 1 || dim < N) {
    throw std::invalid_argument("random_unit_gram needs dim >= N >= 1");
  }
  detail::Rng rng(seed);
  Matrix vecs(dim, N);
  for (int j = 0; j < N; ++j) {
    for (int d = 0; d < dim; ++d) {
      vecs(d, j) = Complex(rng.next_normal(), rng.next_normal());
    }
    vecs.col(j) /= vecs.col(j).norm();
  }
  Matrix z = vecs.adjoint() * vecs;
  for (int j = 0; j < N; ++j) z(j, j) = 1.0;
  return make_correlation_state(std::move(z));
}

CorrelationState sample_near_target(const PhaseLockedState& pls, double epsilon,
                                    std::uint64_t seed) {
  const int n = pls.size();
  const int dim = n + 2;
  detail::Rng rng(seed);
  Matrix vecs(dim, n);
  Vector shared(dim);
  for (int d = 0; d < dim; ++d) {
    shared(d) = Complex(rng.next_normal(), rng.next_normal());
  }
  shared /= shared.norm();
  for (int j = 0; j < n; ++j) {
    Vector w(dim);
    for (int d = 0; d < dim; ++d) {
      w(d) = Complex(rng.next_normal(), rng.next_normal());
    }
    w /= w.norm();
    const Complex phase = std::exp(Complex(0.0, -pls.alpha[j]));
    vecs.col(j) = phase * shared + epsilon * w;
    vecs.col(j) /= vecs.col(j).norm();
  }
  Matrix z = vecs.adjoint() * vecs;
  for (int j = 0; j < n; ++j) z(j, j) = 1.0;
  return make_correlation_state(std::move(z));
}

namespace {

json meta_json(const std::string& schema, const std::string& config_hash) {
  json m;
  m["schema"] = schema;
  m["schema_version"] = kSchemaVersion;
  m["qsync_version"] = kVersion;
  m["config_hash"] = config_hash;
  m["generated"] = timestamp_utc();
  return m;
}

void write_json(const std::string& path, const json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

const char* class_name(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable: return "stable";
    case StabilityClass::saddle: return "saddle";
    case StabilityClass::repulsive: return "repulsive";
    case StabilityClass::marginal: return "marginal";
  }
  return "marginal";
}

json eigenvalue_list(const std::vector<Complex>& eig) {
  json out = json::array();
  for (const Complex& e : eig) out.push_back({e.real(), e.imag()});
  return out;
}

json certificate_json(const BasinCertificate& cert) {
  json c;
  c["A"] = cert.constants.A;
  c["B"] = cert.constants.B;
  c["C_B"] = cert.constants.C_B;
  if (cert.constants.I_B) {
    c["I_B"] = {cert.constants.I_B->first, cert.constants.I_B->second};
  } else {
    c["I_B"] = nullptr;
  }
  c["a_opt"] = cert.constants.a_opt;
  c["lambda_sq_lb"] = cert.constants.lambda_sq_lb;
  c["r_lb"] = cert.constants.r_lb;
  c["M1"] = cert.M1;
  c["M2"] = cert.M2;
  c["admissible"] = cert.admissible;
  c["marginal"] = cert.marginal;
  c["C_M1"] = cert.C_M1;
  if (!cert.reason.empty()) c["reason"] = cert.reason;
  return c;
}

std::vector<double> lambda_series(const Trajectory& traj) {
  std::vector<double> lam;
  lam.reserve(traj.states.size());
  for (const auto& st : traj.states) lam.push_back(order_parameter(st.z));
  return lam;
}

std::optional<double> estimate_period(const Trajectory& traj,
                                      const std::vector<double>& lam) {
  std::vector<double> peaks;
  const std::size_t start = std::max<std::size_t>(1, lam.size() / 2);
  for (std::size_t i = start; i + 1 < lam.size(); ++i) {
    if (lam[i] > lam[i - 1] && lam[i] >= lam[i + 1]) {
      peaks.push_back(traj.states[i].t);
    }
  }
  if (peaks.size() < 2) return std::nullopt;
  return (peaks.back() - peaks.front()) /
         static_cast<double>(peaks.size() - 1);
}

int run_fixed_point(const ExperimentConfig& cfg, const std::string& prefix,
                    const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const double kappa = *cfg.kappa;
  json j = meta_json("fixed_point", hash);
  j["kappa"] = kappa;
  j["n"] = ens.size();
  const auto pls = solve_phase_locked(ens, kappa);
  if (!pls) {
    j["locked"] = false;
    j["reason"] = "no phase-locked state at this coupling";
    write_json(prefix + "_fixed_point.json", j);
    return kExitNoLock;
  }
  j["locked"] = true;
  j["lambda"] = pls->lam;
  j["alphas"] = pls->alpha;
  j["residual"] =
      fmap_residual(correlations_from_phase_locked(*pls), ens, kappa);
  write_json(prefix + "_fixed_point.json", j);
  return kExitSuccess;
}

int run_kappa_star(const ExperimentConfig& cfg, const std::string& prefix,
                   const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const CriticalReport rep = find_kappa_star(ens);
  json j = meta_json("kappa_star", hash);
  j["n"] = ens.size();
  j["kappa_star"] = rep.kappa_star;
  j["lambda_star"] = rep.lambda_star;
  j["opening_angle"] = rep.opening_angle;
  j["method"] = "bisection";
  const KappaStarBounds bounds = kappa_star_bounds(ens.size(), ens.mass());
  j["bounds"] = {{"lower", bounds.lower},
                 {"middle", bounds.middle},
                 {"upper", bounds.upper}};
  if (cfg.preset == "two-cluster") {
    const TwoClusterValues v =
        two_cluster_kappa_star(cfg.n, cfg.cluster_j, cfg.mass);
    j["closed_form"] = {{"kappa_star", v.kappa_star},
                        {"lambda_star", v.lambda_star},
                        {"cos_alpha_1", v.cos_alpha_1},
                        {"cos_alpha_N", v.cos_alpha_N}};
  } else if (cfg.preset == "symmetric-triple") {
    const SymmetricTripleValues v = symmetric_triple_kappa_star(cfg.n, cfg.mass);
    j["closed_form"] = {{"kappa_star", v.kappa_star},
                        {"lambda_star", v.lambda_star},
                        {"opening_angle", v.opening_angle}};
  }
  write_json(prefix + "_kappa_star.json", j);
  return kExitSuccess;
}

int run_stability(const ExperimentConfig& cfg, const std::string& prefix,
                  const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  json j = meta_json("stability", hash);
  CorrelationState state{Matrix::Identity(1, 1), 0.0};
  double kappa = cfg.kappa.value_or(1.0);
  if (contains(kStatePresets, cfg.preset)) {
    HomogeneousKind kind = HomogeneousKind::full_sync;
    if (cfg.preset == "bipolar") kind = HomogeneousKind::bipolar;
    if (cfg.preset == "incoherent") kind = HomogeneousKind::incoherent;
    if (cfg.preset == "trivial") kind = HomogeneousKind::trivial;
    state = make_homogeneous_state(kind, cfg.n, cfg.i_size);
    j["state"] = cfg.preset;
    const ReferenceSpectrum ref =
        homogeneous_reference_spectrum(kind, cfg.n, cfg.i_size);
    json r;
    r["qualitative"] = ref.qualitative;
    r["claim"] = ref.claim;
    if (!ref.eigenvalues.empty()) r["eigenvalues"] = eigenvalue_list(ref.eigenvalues);
    j["reference"] = r;
  } else {
    const auto pls = solve_phase_locked(ens, kappa);
    if (!pls) {
      j["locked"] = false;
      j["reason"] = "no phase-locked state at this coupling";
      write_json(prefix + "_stability.json", j);
      return kExitNoLock;
    }
    state = correlations_from_phase_locked(*pls);
    j["state"] = "locked";
    j["lambda"] = pls->lam;
    j["alphas"] = pls->alpha;
  }
  j["kappa"] = kappa;
  j["n"] = ens.size();
  const SpectrumReport rep = spectrum(build_jacobian(state, ens, kappa));
  j["eigenvalues"] = eigenvalue_list(rep.eigenvalues);
  j["classification"] = class_name(rep.classification);
  j["min_re"] = rep.min_re();
  j["zero_modes"] = rep.zero_modes();
  write_json(prefix + "_stability.json", j);
  return kExitSuccess;
}

int run_simulate(const ExperimentConfig& cfg, const std::string& prefix,
                 const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const double kappa = *cfg.kappa;
  const int n = ens.size();
  const CorrelationState z0 =
      random_unit_gram(n, n + 2, derive_seed(cfg.seed, kappa));
  const SolverConfig solver = solver_for(cfg, kappa);
  const Trajectory traj = integrate(z0, ens, kappa, solver);
  io::write_file(prefix + "_trajectory.csv",
                 io::csv_metadata(hash, true) + io::trajectory_csv(traj));

  json j = meta_json("simulate", hash);
  j["kappa"] = kappa;
  j["n"] = n;
  j["t_final"] = solver.t_final;
  const std::vector<double> lam = lambda_series(traj);
  const std::size_t half = lam.size() / 2;
  j["lambda_final"] = lam.back();
  j["lambda_late_min"] = *std::min_element(lam.begin() + half, lam.end());
  j["lambda_late_max"] = *std::max_element(lam.begin() + half, lam.end());
  if (n == 2) {
    j["Lambda"] = (ens.omega[0] - ens.omega[1]) / kappa;
  }
  const auto pls = solve_phase_locked(ens, kappa);
  j["lock_exists"] = static_cast<bool>(pls);
  const double residual = fmap_residual(traj.final_state(), ens, kappa);
  j["final_residual"] = residual;
  if (pls) {
    const bool converged = residual < 1e-6;
    j["regime"] = converged ? "locked" : "transient";
    j["lambda_target"] = pls->lam;
    if (converged) {
      const DecayRateFit fit =
          decay_rate_fit(traj, correlations_from_phase_locked(*pls));
      j["fitted_rate"] = fit.hit_zero
                             ? json(nullptr)
                             : json(fit.rate);
    }
    write_json(prefix + "_simulate.json", j);
    return kExitSuccess;
  }
  j["regime"] = "periodic";
  if (const auto period = estimate_period(traj, lam)) {
    j["period_estimate"] = *period;
  } else {
    j["period_estimate"] = nullptr;
  }
  write_json(prefix + "_simulate.json", j);
  return kExitNoLock;
}

int run_lyapunov(const ExperimentConfig& cfg, const std::string& prefix,
                 const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const double kappa = *cfg.kappa;
  json j = meta_json("lyapunov", hash);
  j["kappa"] = kappa;
  j["n"] = ens.size();
  j["epsilon"] = cfg.epsilon;
  const auto pls = solve_phase_locked(ens, kappa);
  if (!pls) {
    j["locked"] = false;
    j["reason"] = "no phase-locked state at this coupling";
    write_json(prefix + "_lyapunov.json", j);
    return kExitNoLock;
  }
  j["locked"] = true;
  j["lambda_target"] = pls->lam;
  const CorrelationState target = correlations_from_phase_locked(*pls);
  const CorrelationState z0 =
      sample_near_target(*pls, cfg.epsilon, derive_seed(cfg.seed, kappa));
  const BasinCertificate cert = basin_certificate(z0, target, ens, kappa);
  json c = certificate_json(cert);

  const SolverConfig solver = solver_for(cfg, kappa);
  const Trajectory traj = integrate(z0, ens, kappa, solver);
  io::write_file(prefix + "_trajectory.csv",
                 io::csv_metadata(hash, true) + io::trajectory_csv(traj));
  const DecayRateFit fit = decay_rate_fit(traj, target);
  c["fitted_rate"] = fit.hit_zero ? json(nullptr) : json(fit.rate);
  c["fit_r_squared"] = fit.r_squared;
  c["initial_value"] = lyapunov_value(z0, target);
  c["final_value"] = lyapunov_value(traj.final_state(), target);
  if (cert.admissible) {
    c["envelope_max_ratio"] =
        decay_envelope_max_ratio(traj, target, 0.5 * cert.C_M1);
  }
  j["certificate"] = c;
  write_json(prefix + "_lyapunov.json", j);
  return kExitSuccess;
}

struct SweepRow {
  double kappa = 0.0;
  bool locked = false;
  double lambda = std::nan("");
  double min_re = std::nan("");
  std::string classification = "none";
  bool admissible = false;
  double fitted_rate = std::nan("");
  std::vector<double> alphas;
  double g = std::nan("");
  bool spectrum_stable = false;
  std::string error;
};

SweepRow compute_sweep_row(const ExperimentConfig& cfg,
                           const FrequencyEnsemble& ens, double kappa) {
  SweepRow row;
  row.kappa = kappa;
  try {
    const auto pls = solve_phase_locked(ens, kappa);
    if (!pls) return row;
    row.locked = true;
    row.lambda = pls->lam;
    row.alphas = pls->alpha;
    double sec_sum = 0.0;
    for (double a : pls->alpha) sec_sum += 1.0 / std::cos(a);
    row.g = pls->lam - sec_sum / (2.0 * ens.size());
    const CorrelationState target = correlations_from_phase_locked(*pls);
    const SpectrumReport rep = spectrum(build_jacobian(target, ens, kappa));
    row.min_re = rep.min_re();
    row.classification = class_name(rep.classification);
    row.spectrum_stable = rep.classification == StabilityClass::stable;
    const CorrelationState z0 =
        sample_near_target(*pls, cfg.epsilon, derive_seed(cfg.seed, kappa));
    row.admissible = basin_certificate(z0, target, ens, kappa).admissible;
    const Trajectory traj = integrate(z0, ens, kappa, solver_for(cfg, kappa));
    const DecayRateFit fit = decay_rate_fit(traj, target);
    row.fitted_rate = fit.hit_zero
                          ? std::numeric_limits<double>::infinity()
                          : fit.rate;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

int run_sweep(const ExperimentConfig& cfg, const std::string& prefix,
              const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const SweepRange range = *cfg.range;
  std::vector<double> kappas(range.points);
  for (int i = 0; i < range.points; ++i) {
    kappas[i] = range.lo + (range.hi - range.lo) * i / (range.points - 1);
  }
  std::vector<SweepRow> rows(kappas.size());
  unsigned workers = cfg.threads > 0
                         ? static_cast<unsigned>(cfg.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, kappas.size());
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= kappas.size()) break;
        rows[i] = compute_sweep_row(cfg, ens, kappas[i]);
      }
    });
  }
  for (auto& t : pool) t.join();

  // Phase-diagram table, rows in kappa order regardless of worker timing.
  std::string csv =
      "kappa,locked,lambda,min_re_eig,classification,lyapunov_admissible,"
      "fitted_rate,error\n";
  for (const SweepRow& row : rows) {
    csv += io::format_double(row.kappa);
    csv += row.locked ? ",1," : ",0,";
    csv += io::format_double(row.lambda);
    csv += ",";
    csv += io::format_double(row.min_re);
    csv += ",";
    csv += row.classification;
    csv += row.admissible ? ",1," : ",0,";
    csv += io::format_double(row.fitted_rate);
    csv += ",";
    csv += row.error;
    csv += "\n";
  }
  io::write_file(prefix + "_sweep.csv", io::csv_metadata(hash, true) + csv);

  // Locked-branch detail at the same kappa values.
  std::string branch = "kappa,lambda";
  for (int i = 0; i < ens.size(); ++i) {
    branch += ",alpha_" + std::to_string(i + 1);
  }
  branch += ",g,stable\n";
  for (const SweepRow& row : rows) {
    if (!row.locked || !row.error.empty()) continue;
    branch += io::format_double(row.kappa);
    branch += ",";
    branch += io::format_double(row.lambda);
    for (double a : row.alphas) {
      branch += ",";
      branch += io::format_double(a);
    }
    branch += ",";
    branch += io::format_double(row.g);
    branch += row.spectrum_stable ? ",1\n" : ",0\n";
  }
  io::write_file(prefix + "_lock_branch.csv",
                 io::csv_metadata(hash, true) + branch);
  return kExitSuccess;
}

int run_oracle(const ExperimentConfig& cfg, const std::string& prefix,
               const std::string& hash) {
  const FrequencyEnsemble ens = config_ensemble(cfg);
  const double kappa = *cfg.kappa;
  const int n = ens.size();
  const Grid grid = make_grid(cfg.oracle.half_width, cfg.oracle.grid_points);
  const PotentialSpec V = cfg.oracle.potential == "harmonic"
                              ? PotentialSpec::harmonic(cfg.oracle.omega_trap)
                              : PotentialSpec::free_space();
  Matrix psis(grid.G, n);
  for (int j = 0; j < n; ++j) {
    const double x0 =
        (n == 1) ? 0.0 : -2.0 + 4.0 * j / static_cast<double>(n - 1);
    psis.col(j) = gaussian_packet(grid, x0, 1.0, 0.0);
  }
  const WaveEnsemble we0 = make_wave_ensemble(grid, std::move(psis));

  const double cap = dt_cap(kappa, ens, V, grid);
  const long steps = static_cast<long>(
      std::ceil(cfg.oracle.t_final / (cfg.oracle.dt_factor * cap)));
  EvolveOptions opts;
  opts.dt = cfg.oracle.t_final / static_cast<double>(steps);
  opts.t_final = cfg.oracle.t_final;
  opts.record_every = static_cast<int>(std::max<long>(1, steps / 200));
  opts.snapshot_every = static_cast<int>(
      std::max<long>(1, steps / std::max(1, cfg.oracle.snapshots - 1)));
  const WaveTrajectory traj = evolve(we0, V, ens, kappa, opts);

  // Autonomous reference: same initial correlations, matching record times.
  const CorrelationState ode0 = make_correlation_state(
      derived_correlations(we0), 0.0, 1e-6, 1e-6, 1e-6);
  const double rec_dt = opts.dt * opts.record_every;
  const int substeps = std::max(1, static_cast<int>(std::ceil(rec_dt / 1e-3)));
  SolverConfig ode_cfg;
  ode_cfg.dt = rec_dt / substeps;
  ode_cfg.t_final = cfg.oracle.t_final;
  ode_cfg.method = Method::rk4;
  ode_cfg.record_every = substeps;
  const Trajectory ode = integrate(ode0, ens, kappa, ode_cfg);

  double max_dev = 0.0;
  const std::size_t shared =
      std::min(ode.states.size(), traj.correlations.states.size());
  for (std::size_t i = 0; i < shared; ++i) {
    const double dev =
        (ode.states[i].z - traj.correlations.states[i].z).cwiseAbs().maxCoeff();
    max_dev = std::max(max_dev, dev);
  }
  double drift = 0.0;
  for (double d : traj.mass_drift) drift = std::max(drift, d);

  io::write_file(prefix + "_wave_density.csv",
                 io::csv_metadata(hash, true) + io::wave_density_csv(traj));
  io::write_file(
      prefix + "_wave_correlations.csv",
      io::csv_metadata(hash, true) + io::trajectory_csv(traj.correlations));

  json j = meta_json("oracle", hash);
  j["kappa"] = kappa;
  j["n"] = n;
  j["potential"] = cfg.oracle.potential;
  if (cfg.oracle.potential == "harmonic") j["omega_trap"] = cfg.oracle.omega_trap;
  j["grid_points"] = grid.G;
  j["half_width"] = grid.L;
  j["dt"] = opts.dt;
  j["steps"] = steps;
  j["records_compared"] = shared;
  j["max_ode_deviation"] = max_dev;
  j["mass_drift_max"] = drift;
  write_json(prefix + "_oracle.json", j);
  return kExitSuccess;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  try {
    validate_config(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const std::string hash = io::fnv1a_hex(canonical_config(cfg));
  const std::string prefix = output_prefix(cfg);
  try {
    if (cfg.command == "simulate") return run_simulate(cfg, prefix, hash);
    if (cfg.command == "fixed-point") return run_fixed_point(cfg, prefix, hash);
    if (cfg.command == "stability") return run_stability(cfg, prefix, hash);
    if (cfg.command == "lyapunov") return run_lyapunov(cfg, prefix, hash);
    if (cfg.command == "kappa-star") return run_kappa_star(cfg, prefix, hash);
    if (cfg.command == "sweep") return run_sweep(cfg, prefix, hash);
    if (cfg.command == "oracle") return run_oracle(cfg, prefix, hash);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
  std::cerr << "config error: unknown command\n";
  return kExitConfigError;
}

}  // namespace qsync
