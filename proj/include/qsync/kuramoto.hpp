#pragma once

#include <optional>
#include <vector>

#include "qsync/core_model.hpp"

namespace qsync {

// Classical coupled-oscillator phase model
//   dtheta_j/dt = omega_j + (K/N) sum_l sin(theta_l - theta_j),
// equivalently omega_j - K R sin(theta_j - Phi) with
// R e^{iPhi} = (1/N) sum_l e^{i theta_l}.

struct KuramotoState {
  RealVector thetas;  // wrapped to [-pi, pi)
  double t = 0.0;
  int size() const { return static_cast<int>(thetas.size()); }
};

// Wraps into [-pi, pi).
double wrap_angle(double x);

KuramotoState make_kuramoto_state(RealVector thetas, double t = 0.0);

// Pairwise-sum form of the vector field.
RealVector kuramoto_rhs(const KuramotoState& state, const FrequencyEnsemble& ens,
                        double K);

// Mean-field form omega_j - K R sin(theta_j - Phi); agrees with
// kuramoto_rhs to rounding. Exposed so the equivalence is testable.
RealVector kuramoto_rhs_reduced(const KuramotoState& state,
                                const FrequencyEnsemble& ens, double K);

// R e^{iPhi}; returns {R, Phi}.
std::pair<double, double> kuramoto_order_parameter(const KuramotoState& state);

struct KuramotoFixedPoint {
  RealVector thetas;  // theta_j with sin(theta_j) = omega_j / (K R)
  double R = 0.0;
  double residual = 0.0;  // self-consistency defect of R
};

// Stable-branch locked state (all cos theta_j >= 0); empty when the scalar
// self-consistency equation has no real root (K below threshold).
std::optional<KuramotoFixedPoint> kuramoto_fixed_point(
    const FrequencyEnsemble& ens, double K);

struct KuramotoTrajectory {
  std::vector<KuramotoState> states;
  // |sum_j theta_j(t) - sum_j theta_j(0)| on the unwrapped trajectory,
  // one entry per recorded state; conserved when sum omega_j = 0.
  std::vector<double> sum_drift;
  double K = 0.0;
  const KuramotoState& final_state() const { return states.back(); }
};

KuramotoTrajectory integrate_kuramoto(const KuramotoState& state0,
                                      const FrequencyEnsemble& ens, double K,
                                      const SolverConfig& cfg);

}  // namespace qsync
