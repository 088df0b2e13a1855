#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsync/core_model.hpp"

namespace qsync {

// Experiment orchestration: a validated configuration drives one of the
// subcommands, each of which emits CSV/JSON files under an output prefix.
// Outputs are deterministic for a fixed (config, seed) pair except for the
// timestamp metadata line.

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;
inline constexpr int kExitNoLock = 4;

struct SweepRange {
  double lo = 0.0;
  double hi = 0.0;
  int points = 0;
};

// Solver fields the user set explicitly; everything else comes from
// SolverConfig::defaults_for at the coupling in play.
struct SolverOverrides {
  std::optional<double> dt;
  std::optional<double> t_final;
  std::optional<double> abs_tol;
  std::optional<double> rel_tol;
  std::optional<int> record_every;
  std::optional<std::string> method;  // "rk4" | "rk45"
};

struct OracleConfig {
  std::string potential = "free";  // "free" | "harmonic"
  double omega_trap = 0.2;
  int grid_points = 1024;
  double half_width = 20.0;
  double dt_factor = 0.5;  // fraction of the admissible step cap
  double t_final = 10.0;
  int snapshots = 5;  // stored wave snapshots (>= 2, includes endpoints)
};

struct ExperimentConfig {
  std::string command;  // simulate | fixed-point | stability | lyapunov
                        // | kappa-star | sweep | oracle
  std::vector<double> omegas;
  // Ensemble or state preset: "two-cluster", "symmetric-triple" build
  // frequency ensembles; "full-sync", "bipolar", "incoherent", "trivial"
  // name the homogeneous correlation states (stability only, zero
  // frequencies).
  std::string preset;
  int n = 0;
  int i_size = 1;
  int cluster_j = 1;
  double mass = 2.0;

  std::optional<double> kappa;
  std::optional<SweepRange> range;
  SolverOverrides solver;
  std::uint64_t seed = 1;
  double epsilon = 0.005;  // amplitude of sampled perturbations off a lock
  std::string output = "qsync_run";
  int threads = 0;  // sweep workers; 0 = hardware concurrency
  OracleConfig oracle;
};

// Merges the JSON config text into cfg. Unknown keys are rejected; the
// grammar is documented in the README. Throws std::invalid_argument.
void apply_config_json(ExperimentConfig& cfg, const std::string& text);

// Canonical serialization of the effective configuration; its FNV-1a hash
// is the config_hash stamped into every output file.
std::string canonical_config(const ExperimentConfig& cfg);

// Cross-field invariants (range only with sweep, required ensembles and
// couplings per command). Throws std::invalid_argument.
void validate_config(const ExperimentConfig& cfg);

// Frequency ensemble named by the config: raw omegas, or the two-cluster /
// symmetric-triple presets, or zero frequencies for the homogeneous state
// presets.
FrequencyEnsemble config_ensemble(const ExperimentConfig& cfg);

// Effective solver settings at coupling kappa.
SolverConfig solver_for(const ExperimentConfig& cfg, double kappa);

// Output prefix after the QSYNC_OUTPUT_DIR directory override.
std::string output_prefix(const ExperimentConfig& cfg);

// Gram matrix of `dim` >= N random complex unit vectors: positive
// semidefinite with exact unit diagonal, hence a valid correlation state.
CorrelationState random_unit_gram(int N, int dim, std::uint64_t seed);

// Correlation state near the locked target: Gram matrix of the vectors
// e^{-i alpha_j} u + epsilon w_j with one shared and N independent random
// unit vectors; entrywise deviation from the target is O(epsilon).
CorrelationState sample_near_target(const PhaseLockedState& pls, double epsilon,
                                    std::uint64_t seed);

// Per-coupling seed stream; sweep rows and single runs at the same kappa
// draw identical states.
std::uint64_t derive_seed(std::uint64_t seed, double kappa);

// Runs the configured command, writes its files, returns the exit code
// (0 success, 2 config error, 3 numerical failure, 4 no locked state where
// one was required).
int run_experiment(const ExperimentConfig& cfg);

}  // namespace qsync
