#pragma once

#include <memory>
#include <vector>

#include "qsync/core_model.hpp"
#include "qsync/correlation_dynamics.hpp"

namespace qsync {

// 1-D wave-function evolution on a periodic grid [-L, L):
//   i dpsi_j/dt = H psi_j + Omega_j psi_j
//                 + (i kappa / 2)(zeta - <zeta, psi_j> psi_j),
// H = -(1/2) d^2/dx^2 + V(x), zeta = (1/N) sum_l psi_l, inner products
// conjugate in the first slot. Serves as an independent oracle for the
// correlation flow: z_jk(t) = <psi_j(t), psi_k(t)> must reproduce the
// autonomous matrix dynamics for any potential.

struct Grid {
  double L = 0.0;  // half-width
  int G = 0;       // grid points
  double dx = 0.0;
  RealVector x;  // -L + i dx
  RealVector k;  // DFT wavenumbers, FFT ordering
};

Grid make_grid(double L, int G);

struct PotentialSpec {
  enum class Kind { free_space, harmonic };
  Kind kind = Kind::free_space;
  double omega_trap = 0.0;

  static PotentialSpec free_space();
  static PotentialSpec harmonic(double omega_trap);
};

// V(x) on the grid (zero for free space).
RealVector potential_values(const PotentialSpec& V, const Grid& grid);

struct WaveEnsemble {
  Grid grid;
  Matrix psis;  // G x N, column j holds psi_j on the grid
  double t = 0.0;

  int size() const { return static_cast<int>(psis.cols()); }
};

// Validates unit mass per column within tol_mass.
WaveEnsemble make_wave_ensemble(Grid grid, Matrix psis, double t = 0.0,
                                double tol_mass = 1e-8);

// Normalized Gaussian packet centered at x0 with |psi|^2 width sigma and
// carrier momentum k0.
Vector gaussian_packet(const Grid& grid, double x0, double sigma, double k0);

// dx-weighted <f, g> with the conjugate on f.
Complex grid_inner(const Grid& grid, const Vector& f, const Vector& g);
double grid_norm(const Grid& grid, const Vector& f);

// z_jk = <psi_j, psi_k>: Hermitian, unit diagonal up to mass drift.
Matrix derived_correlations(const WaveEnsemble& we);

// Largest admissible time step, 1e-3 / max(kappa, max|Omega|, sup V).
double dt_cap(double kappa, const FrequencyEnsemble& ens, const PotentialSpec& V,
              const Grid& grid);

// e^{-iHt}: spectral multiplier for free space, dense eigendecomposition of
// the discretized H for the harmonic trap (built once per instance).
class Propagator {
 public:
  Propagator(const Grid& grid, const PotentialSpec& V);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  Vector apply(const Vector& f, double t) const;
  // Columns propagated independently at the same t.
  Matrix apply(const Matrix& fs, double t) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct EvolveOptions {
  double dt = 1e-4;
  double t_final = 10.0;
  int record_every = 1;    // correlation-record stride, in steps
  int snapshot_every = 0;  // wave-snapshot stride; 0 keeps first and last only
  // Streaming quadrature of the scattering integral
  // integral_0^T e^{+iHs} W_j(s) ds, W_j = Omega_j psi_j
  // + (i kappa/2)(zeta - <zeta,psi_j> psi_j), accumulated on the fly because
  // storing wave snapshots at quadrature resolution would be unaffordable.
  bool accumulate_asymptotic = false;
  int sample_every = 1;  // quadrature stride, in steps
  double abort_mass_drift = 1e-6;

  void validate() const;
};

struct WaveTrajectory {
  Grid grid;
  PotentialSpec potential;
  FrequencyEnsemble ens;
  double kappa = 0.0;
  double dt = 0.0;

  std::vector<WaveEnsemble> snapshots;  // always includes initial and final
  Trajectory correlations;              // derived z(t) at record stride
  std::vector<double> mass_drift;       // max_j |norm(psi_j) - 1| per record

  bool has_asymptotic = false;
  Matrix psi0;              // initial columns (kept when accumulating)
  Matrix integral_trap;     // G x N, trapezoid accumulator
  Matrix integral_simpson;  // G x N, composite-Simpson accumulator
  double tail_norm = 0.0;   // max_j ||W_j(t_final)||
};

// Strang splitting: half kinetic step (spectral), full potential+coupling
// step (explicit midpoint on grid values), half kinetic step. Consecutive
// kinetic half-steps are fused except where an observation falls. Mass is
// not renormalized; drift is the accuracy monitor and exceeding
// abort_mass_drift raises NumericalError.
WaveTrajectory evolve(const WaveEnsemble& we0, const PotentialSpec& V,
                      const FrequencyEnsemble& ens, double kappa,
                      const EvolveOptions& opts);

struct SyncErrorSeries {
  std::vector<double> t;
  std::vector<double> direct;        // max_jk || e^{i(a_j - a_k)} psi_j - psi_k ||
  std::vector<double> via_identity;  // same through the correlation identity
};

// Evaluated at each stored snapshot. The identity form uses
// ||.||^2 = ||psi_j||^2 + ||psi_k||^2 - 2(cos(da) r_jk + sin(da) s_jk),
// keeping the true norms so the two columns agree to rounding even under
// mass drift.
SyncErrorSeries sync_error(const WaveTrajectory& traj,
                           const PhaseLockedState& pls);

struct AsymptoticResult {
  Matrix psi_tilde;  // G x N, from the Simpson accumulator
  double tail_norm = 0.0;
  double trap_simpson_diff = 0.0;        // max_j column-norm difference
  std::vector<double> scattering_error;  // ||psi_j(T) - e^{-iHT} psi_tilde_j||
};

// psi_tilde_j = psi_j(0) - i integral_0^T e^{+iHs} W_j(s) ds. The
// propagator sign inside the integral is the one the interaction-picture
// derivation produces; the scattering errors reported here are the proof
// that it is the convergent choice. Requires a trajectory evolved with
// accumulate_asymptotic and a settled integrand (tail < 1e-8), else throws.
AsymptoticResult asymptotic_wavefunctions(const WaveTrajectory& traj);

}  // namespace qsync
