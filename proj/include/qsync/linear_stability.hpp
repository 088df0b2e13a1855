#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qsync/core_model.hpp"

namespace qsync {

// Linearization of the correlation flow around a fixed point, in the map
//   F_jk = -i(Omega_j - Omega_k) z_jk / kappa
//          - (1/(2N)) sum_l (z_jl + z_lk)(1 - z_jk),
// treated holomorphically in the N(N-1) off-diagonal entries (z_jk and
// z_kj are independent variables). F = -RHS/kappa, so a fixed point is
// linearly stable exactly when every Jacobian eigenvalue has positive
// real part.

// Row-major enumeration of the off-diagonal pairs:
// (0,1), (0,2), ..., (0,N-1), (1,0), (1,2), ...
struct IndexMap {
  static int pair_to_flat(int j, int k, int N);
  static std::pair<int, int> flat_to_pair(int n, int N);
};

// Dense N(N-1) x N(N-1) Jacobian of F. Each row holds the diagonal entry
//   d = -i(Omega_j - Omega_k)/kappa + (1/(2N)) sum_l (z_jl + z_lk)
//       - (1/N)(1 - z_jk)
// and exactly 2(N-2) off-diagonal entries -(1/(2N))(1 - z_jk) in the
// columns sharing one index with (j,k).
Matrix build_jacobian(const CorrelationState& state, const FrequencyEnsemble& ens,
                      double kappa);

enum class StabilityClass { stable, saddle, repulsive, marginal };

struct SpectrumReport {
  std::vector<Complex> eigenvalues;  // sorted by (Re, Im)
  StabilityClass classification = StabilityClass::marginal;
  double zero_tolerance = 1e-9;

  double min_re() const;
  int zero_modes() const;  // eigenvalues with |Re| <= zero_tolerance
};

// Dense nonsymmetric eigensolve; classification per the sign convention
// above (stable iff all Re > zero_tolerance).
SpectrumReport spectrum(const Matrix& m, double zero_tolerance = 1e-9);

enum class HomogeneousKind { full_sync, bipolar, incoherent, trivial };

// The four closed-form correlation matrices used as stability landmarks:
// all-ones, two antipodal groups (I_size entries flipped), uniformly spread
// phases z_jk = e^{2 pi i (j-k)/N}, and zero off-diagonal.
CorrelationState make_homogeneous_state(HomogeneousKind kind, int N,
                                        int I_size = 1);

struct ReferenceSpectrum {
  std::vector<Complex> eigenvalues;  // empty when qualitative
  bool qualitative = false;
  std::string claim;  // sign information only, e.g. "all Re < 0"
};

// Published reference table for the homogeneous spectra: full_sync is all
// ones; bipolar with I_size = 1 is {0} u {-2/N}^((N-1)(N-2)-1)
// u {(N-2)/N}^(2(N-1)); incoherent and trivial carry only the qualitative
// claim "all Re < 0". This is a lookup of the claimed values, not a
// computation; spectrum() reports what the Jacobian actually does, and the
// two disagree for bipolar, incoherent, and trivial (see tests).
ReferenceSpectrum homogeneous_reference_spectrum(HomogeneousKind kind, int N,
                                                 int I_size = 1);

struct PerturbedEigenvalue {
  int j = 0;
  int k = 0;
  double re_estimate = 0.0;
};

// First-order estimate of the Jacobian eigenvalues at a locked state:
//   Re ~ (lam/2)(cos a_k + cos a_j) - (1/N)(1 - cos(a_j - a_k)),
// one entry per off-diagonal pair in IndexMap order. Valid to first order
// only when all frequency differences are distinct (assumption_check).
std::vector<PerturbedEigenvalue> perturbed_eigenvalues(
    const PhaseLockedState& pls);

// True iff all N(N-1) ordered differences Omega_j - Omega_k (j != k) are
// mutually distinct beyond 1e-12.
bool assumption_check(const FrequencyEnsemble& ens);

}  // namespace qsync
