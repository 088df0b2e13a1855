#pragma once

#include "qsync/core_model.hpp"

namespace qsync {

// Detection of the smallest coupling admitting a phase-locked state, the
// sensitivity derivatives of the locked branch, and the closed-form
// threshold values for the two exactly solvable frequency arrangements.

enum class CriticalMethod {
  closed_form_two_cluster,
  closed_form_symmetric_triple,
  bisection,
};

struct CriticalReport {
  double kappa_star = 0.0;
  double lambda_star = 0.0;
  double opening_angle = 0.0;  // alpha_1 - alpha_N at threshold, radians
  CriticalMethod method = CriticalMethod::bisection;
};

struct Sensitivities {
  double dlambda_dkappa = 0.0;
  double dalpha1_dkappa = 0.0;
};

// Derivatives of the locked branch along kappa:
//   dalpha_1/dkappa = -lam tan(alpha_1) / (kappa D),
//   dlambda/dkappa  = -lam/kappa + lam^2/(kappa D),
// with D = lam - (1/N) sum_j sin^2(alpha_j)/cos(alpha_j). Throws
// NumericalError when |D| <= 1e-10 (the branch is folding, kappa near the
// threshold).
Sensitivities sensitivities(const PhaseLockedState& pls,
                            const FrequencyEnsemble& ens, double kappa);

// Bisection for the threshold coupling: above it the stable-branch scalar
// solve succeeds with positive margin g = lam - (1/(2N)) sum_j sec(alpha_j);
// at the threshold g vanishes (the scalar self-consistency becomes tangent).
// lambda_star and the opening angle are read off at the tangency point,
// where they are smooth in kappa; evaluating the locked branch just above
// the threshold instead would lose half the digits to the square-root fold.
CriticalReport find_kappa_star(const FrequencyEnsemble& ens);

// Frequencies in two opposite clusters, j entries at M/(2j) and N-j at
// -M/(2(N-j)); total absolute mass M.
FrequencyEnsemble make_two_cluster_ensemble(int N, int j, double M);

// Frequencies (M/2, 0, ..., 0, -M/2).
FrequencyEnsemble make_symmetric_triple_ensemble(int N, double M);

struct TwoClusterValues {
  double kappa_star = 0.0;
  double lambda_star = 0.0;
  double cos_alpha_1 = 0.0;
  double cos_alpha_N = 0.0;  // cos^2 a1 + cos^2 aN = 1: opening is pi/2
};

TwoClusterValues two_cluster_kappa_star(int N, int j, double M);

struct SymmetricTripleValues {
  double kappa_star = 0.0;
  double lambda_star = 0.0;
  double opening_angle = 0.0;
};

SymmetricTripleValues symmetric_triple_kappa_star(int N, double M);

struct KappaStarBounds {
  double lower = 0.0;   // 2M/N
  double middle = 0.0;  // symmetric-triple threshold
  double upper = 0.0;   // M
};

// lower <= middle <= upper, with all three equal at N = 2.
KappaStarBounds kappa_star_bounds(int N, double M);

}  // namespace qsync
