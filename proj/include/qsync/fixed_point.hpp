#pragma once

#include <optional>

#include "qsync/core_model.hpp"

namespace qsync {

// Phase-locked fixed points of the correlation flow: alpha_j solving
//   lam * sin(alpha_j) = Omega_j / kappa,  lam = (1/N) sum_j cos(alpha_j),
// with all alpha_j on the principal branch (cos alpha_j >= 0). The scalar
// self-consistency has at most two roots; the larger lam is the stable
// branch, the smaller one (largest angles) the unstable branch.

enum class Branch { stable, unstable };

// Empty result means no locked state exists at this coupling.
std::optional<PhaseLockedState> solve_phase_locked(const FrequencyEnsemble& ens,
                                                   double kappa,
                                                   Branch branch = Branch::stable);

// z_jk = e^{i(alpha_j - alpha_k)}; Hermitian with unimodular entries.
CorrelationState correlations_from_phase_locked(const PhaseLockedState& pls);

// max_{j != k} |F_jk| where
//   F_jk = -i(Omega_j - Omega_k) z_jk / kappa
//          - (1/(2N)) sum_l (z_jl + z_lk)(1 - z_jk),
// so fixed points of the correlation flow have residual 0 and the value
// equals max|correlation_rhs| / kappa.
double fmap_residual(const CorrelationState& state, const FrequencyEnsemble& ens,
                     double kappa);

// Maps a locked state onto the classical-oscillator fixed point with K = kappa:
// theta_j = sigma * alpha_j with the sign fixed by the residual of
// sin(theta_j) = omega_j / (K R), R = lam. Throws NumericalError if neither
// sign satisfies the identity to 1e-10.
RealVector kuramoto_correspondence(const PhaseLockedState& pls,
                                   const FrequencyEnsemble& ens, double kappa);

}  // namespace qsync
