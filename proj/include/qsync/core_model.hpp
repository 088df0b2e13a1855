#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qsync {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Thrown when an integration or solve breaks down (blow-up, non-convergence,
// step floor). Distinct from std::invalid_argument, which signals bad inputs.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Natural frequencies, zero mean, sorted descending.
struct FrequencyEnsemble {
  std::vector<double> omega;

  int size() const { return static_cast<int>(omega.size()); }
  double max_abs() const;   // max_j |omega_j|
  double mass() const;      // sum_j |omega_j|
};

// Sorts descending, subtracts the mean, validates finiteness.
// Requires at least 2 entries; trivial (all equal) input is allowed and
// normalizes to all zeros.
FrequencyEnsemble make_ensemble(std::vector<double> raw);

// Pairwise correlations z_jk at a fixed time. Unit diagonal is pinned
// exactly; the matrix is Hermitian up to numerical drift and every entry
// lies in the closed unit disk up to tol_ball.
struct CorrelationState {
  Matrix z;
  double t = 0.0;

  int size() const { return static_cast<int>(z.rows()); }
};

// Validates the invariants (square, unit diagonal within tol_diag, Hermitian
// within tol_herm, |z_jk| <= 1 + tol_ball), pins the diagonal to exactly 1
// and returns the state. Throws std::invalid_argument on violation.
CorrelationState make_correlation_state(Matrix z, double t = 0.0,
                                        double tol_ball = 1e-8,
                                        double tol_herm = 1e-6,
                                        double tol_diag = 1e-9);

// Asymptotic phase-locked configuration: z_jk -> e^{i(alpha_j - alpha_k)}
// with order parameter lam = (1/N) sum_j cos(alpha_j) and
// (1/N) sum_j sin(alpha_j) = 0.
struct PhaseLockedState {
  std::vector<double> alpha;
  double lam = 0.0;

  int size() const { return static_cast<int>(alpha.size()); }
};

// Validates the two closure identities to 1e-10 and lam in (0, 1].
PhaseLockedState make_phase_locked_state(std::vector<double> alpha, double lam);

enum class Method { rk4, rk45 };

struct SolverConfig {
  double dt = 1e-3;
  double t_final = 10.0;
  Method method = Method::rk4;
  double abs_tol = 1e-10;   // rk45 only
  double rel_tol = 1e-8;    // rk45 only
  int record_every = 1;     // record every k-th accepted step
  double tol_ball = 1e-8;   // ball-invariance guard

  void validate() const;
  // Default step scaling: dt = 1e-3 / max(kappa, 1e-6).
  static SolverConfig defaults_for(double kappa, double t_final);
};

}  // namespace qsync
