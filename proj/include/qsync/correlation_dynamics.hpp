#pragma once

#include "qsync/core_model.hpp"

namespace qsync {

// Right-hand side of the closed correlation system
//   dz_jk/dt = i(w_j - w_k) z_jk + (kappa/2N) sum_l (z_jl + z_lk)(1 - z_jk).
// Every entry is evaluated independently; D_jj = 0 and D_kj = conj(D_jk)
// hold exactly in IEEE arithmetic, not just to rounding.
Matrix correlation_rhs(const Matrix& z, const FrequencyEnsemble& ens,
                       double kappa);

// The same vector field split into real and imaginary parts, plus the
// mean-field rates. dr_avg[j], ds_avg[j] are the derivatives of
// Re/Im of z_j = (1/N) sum_l z_lj and equal the column averages of dr, ds
// on Hermitian states.
struct SplitRates {
  RealMatrix dr, ds;
  Eigen::VectorXd dr_avg, ds_avg;
};
SplitRates split_rhs(const Matrix& z, const FrequencyEnsemble& ens,
                     double kappa);

struct Trajectory {
  std::vector<CorrelationState> states;
  std::vector<double> sym_drift;  // max |z_kj - conj(z_jk)| per record
  double kappa = 0.0;

  const CorrelationState& final_state() const { return states.back(); }
};

// Integrates the correlation system from z0.t to z0.t + cfg.t_final.
// The unit diagonal is re-pinned after every step; a ball-invariance
// violation (any |z_jk| > 1 + cfg.tol_ball) raises NumericalError.
Trajectory integrate(const CorrelationState& z0, const FrequencyEnsemble& ens,
                     double kappa, const SolverConfig& cfg);

// Column means z_j = (1/N) sum_l z_lj (the mean-field correlations).
Vector mean_field(const Matrix& z);

// Order parameter lam >= 0 with lam^2 = (1/N^2) sum_jk Re z_jk
//                                     = (1/N) sum_j Re z_j.
double order_parameter(const Matrix& z);

}  // namespace qsync
