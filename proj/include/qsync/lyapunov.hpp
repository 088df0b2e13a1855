#pragma once

#include <optional>
#include <string>
#include <utility>

#include "qsync/core_model.hpp"
#include "qsync/correlation_dynamics.hpp"

namespace qsync {

// Energy functional L = (1/(2N^2)) sum_jk (f_jk^2 + g_jk^2), where
// f_jk and g_jk are the real and imaginary deviations of the correlation
// matrix from a reference state, together with the explicit constants that
// certify exponential decay of L inside a computable basin.

struct LyapunovConstants {
  double A = 0.0;    // coupling ratio kappa / max|Omega|
  double B = 0.0;    // 1 / (A^2 (1 + sqrt(1 - 4/A^2)))
  double C_B = 0.0;  // 2 (1 - 4 sqrt(B) - 4 B)
  // Interval of Young's-inequality weights with positive decay margin;
  // empty when 1 - 24B + 16B^2 <= 0.
  std::optional<std::pair<double, double>> I_B;
  double a_opt = 0.0;         // 1 / (4 sqrt(B)), midpoint choice
  double lambda_sq_lb = 0.0;  // (1 + sqrt(1 - 4/A^2)) / 2
  double r_lb = 0.0;          // 1 - 4B, asymptotic lower bound on Re z_jk
};

// Smallest A for which the decay constant C_B is positive:
// 2 sqrt((11 + 8 sqrt(2)) / 7).
double lyapunov_threshold_A();

// Requires A >= 2 (throws std::invalid_argument otherwise).
LyapunovConstants constants_for(double A);

// L(state; target). Zero iff the two matrices agree entrywise.
double lyapunov_value(const CorrelationState& state,
                      const CorrelationState& target);

struct BasinCertificate {
  LyapunovConstants constants;
  double M1 = 0.0;  // sup_{j != k} |f_jk(0)|
  double M2 = 0.0;  // sup_{j != k} |g_jk(0)|
  bool admissible = false;  // 4N(M1 + M2) - 2 M1 < C_B, strict
  bool marginal = false;    // condition within 1e-12 of equality
  double C_M1 = 0.0;        // decay-rate constant 2 kappa (C_B - 2 M1)
  std::string reason;       // empty when admissible
};

// Evaluates the sufficient condition for exponential convergence of
// state0 toward target. When kappa / max|Omega| is below the threshold the
// certificate is refused outright (admissible = false, reason set). A zero
// ensemble is treated as A = 1e12.
BasinCertificate basin_certificate(const CorrelationState& state0,
                                   const CorrelationState& target,
                                   const FrequencyEnsemble& ens, double kappa);

struct DecayRateFit {
  double rate = 0.0;       // positive decay constant, slope of -log L
  double r_squared = 0.0;  // quality of the linear fit on log L
  bool hit_zero = false;   // L reached numerical zero; rate is +inf
  double zero_time = 0.0;  // first crossing time when hit_zero
};

// Least-squares exponential fit of L(t) over the trailing half of the
// recorded trajectory.
DecayRateFit decay_rate_fit(const Trajectory& traj,
                            const CorrelationState& target);

// max over recorded t of L(t) / (L(0) e^{-half_rate t}), computed in log
// space over the prefix where L is numerically resolvable (the measurement
// stops once L falls below 1e-24; past that the value is rounding noise
// against an envelope that keeps decaying). Returns 0 when L(0) = 0.
// Certified trajectories stay <= 1 + 1e-6.
double decay_envelope_max_ratio(const Trajectory& traj,
                                const CorrelationState& target,
                                double half_rate);

}  // namespace qsync
