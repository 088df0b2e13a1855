#include "qsync/lyapunov.hpp"

#include <cmath>
#include <limits>

namespace qsync {

double lyapunov_threshold_A() { return 2.0 * std::sqrt((11.0 + 8.0 * std::sqrt(2.0)) / 7.0); }

LyapunovConstants constants_for(double A) {
  if (!(A >= 2.0))
    throw std::invalid_argument("constants_for: requires A >= 2");
  LyapunovConstants c;
  c.A = A;
  const double root = std::sqrt(std::max(1.0 - 4.0 / (A * A), 0.0));
  c.B = 1.0 / (A * A * (1.0 + root));
  c.C_B = 2.0 * (1.0 - 4.0 * std::sqrt(c.B) - 4.0 * c.B);
  c.a_opt = 1.0 / (4.0 * std::sqrt(c.B));
  c.lambda_sq_lb = 0.5 * (1.0 + root);
  c.r_lb = 1.0 - 4.0 * c.B;
  const double disc = 1.0 - 24.0 * c.B + 16.0 * c.B * c.B;
  if (disc > 0.0) {
    const double s = std::sqrt(disc);
    c.I_B = std::make_pair((1.0 - 4.0 * c.B - s) / (16.0 * c.B),
                           (1.0 - 4.0 * c.B + s) / (16.0 * c.B));
  }
  return c;
}

double lyapunov_value(const CorrelationState& state,
                      const CorrelationState& target) {
  const int n = state.size();
  if (n != target.size())
    throw std::invalid_argument("lyapunov_value: dimension mismatch");
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      const double f = target.z(j, k).real() - state.z(j, k).real();
      const double g = target.z(j, k).imag() - state.z(j, k).imag();
      acc += f * f + g * g;
    }
  }
  return acc / (2.0 * static_cast<double>(n) * static_cast<double>(n));
}

BasinCertificate basin_certificate(const CorrelationState& state0,
                                   const CorrelationState& target,
                                   const FrequencyEnsemble& ens, double kappa) {
  if (!(kappa > 0.0))
    throw std::invalid_argument("basin_certificate: kappa must be positive");
  const int n = state0.size();
  if (n != target.size() || n != ens.size())
    throw std::invalid_argument("basin_certificate: dimension mismatch");

  BasinCertificate cert;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const double f = target.z(j, k).real() - state0.z(j, k).real();
      const double g = target.z(j, k).imag() - state0.z(j, k).imag();
      cert.M1 = std::max(cert.M1, std::abs(f));
      cert.M2 = std::max(cert.M2, std::abs(g));
    }
  }

  const double omega_max = ens.max_abs();
  const double A = omega_max > 0.0 ? kappa / omega_max : 1e12;
  if (A < lyapunov_threshold_A()) {
    cert.constants.A = A;
    cert.constants.B = std::numeric_limits<double>::quiet_NaN();
    cert.constants.C_B = std::numeric_limits<double>::quiet_NaN();
    cert.constants.a_opt = std::numeric_limits<double>::quiet_NaN();
    cert.constants.lambda_sq_lb = std::numeric_limits<double>::quiet_NaN();
    cert.constants.r_lb = std::numeric_limits<double>::quiet_NaN();
    cert.admissible = false;
    cert.reason = "A below Lyapunov threshold";
    return cert;
  }

  cert.constants = constants_for(A);
  const double lhs = 4.0 * static_cast<double>(n) * (cert.M1 + cert.M2) - 2.0 * cert.M1;
  const double margin = cert.constants.C_B - lhs;
  cert.admissible = margin > 0.0;
  cert.marginal = std::abs(margin) <= 1e-12;
  cert.C_M1 = 2.0 * kappa * (cert.constants.C_B - 2.0 * cert.M1);
  if (!cert.admissible) cert.reason = "deviation bound exceeds decay constant";
  return cert;
}

DecayRateFit decay_rate_fit(const Trajectory& traj,
                            const CorrelationState& target) {
  const auto& states = traj.states;
  if (states.size() < 2)
    throw std::invalid_argument("decay_rate_fit: need at least two records");

  std::vector<double> ts, logs;
  ts.reserve(states.size());
  logs.reserve(states.size());
  for (const auto& st : states) {
    const double L = lyapunov_value(st, target);
    if (L < 1e-280) {
      DecayRateFit fit;
      fit.rate = std::numeric_limits<double>::infinity();
      fit.r_squared = 1.0;
      fit.hit_zero = true;
      fit.zero_time = st.t;
      return fit;
    }
    ts.push_back(st.t);
    logs.push_back(std::log(L));
  }

  const std::size_t start = ts.size() / 2;
  const std::size_t m = ts.size() - start;
  if (m < 2) throw std::invalid_argument("decay_rate_fit: window too short");
  double tm = 0.0, lm = 0.0;
  for (std::size_t i = start; i < ts.size(); ++i) {
    tm += ts[i];
    lm += logs[i];
  }
  tm /= static_cast<double>(m);
  lm /= static_cast<double>(m);
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = start; i < ts.size(); ++i) {
    const double dt = ts[i] - tm;
    const double dl = logs[i] - lm;
    stt += dt * dt;
    stl += dt * dl;
    sll += dl * dl;
  }
  if (stt == 0.0) throw std::invalid_argument("decay_rate_fit: degenerate window");
  const double slope = stl / stt;
  DecayRateFit fit;
  fit.rate = -slope;
  fit.r_squared = sll > 0.0 ? (stl * stl) / (stt * sll) : 1.0;
  return fit;
}

double decay_envelope_max_ratio(const Trajectory& traj,
                                const CorrelationState& target,
                                double half_rate) {
  const auto& states = traj.states;
  if (states.empty())
    throw std::invalid_argument("decay_envelope_max_ratio: empty trajectory");
  const double L0 = lyapunov_value(states.front(), target);
  if (L0 <= 0.0) return 0.0;
  const double t0 = states.front().t;
  const double log_L0 = std::log(L0);
  double worst = 0.0;
  for (const auto& st : states) {
    const double L = lyapunov_value(st, target);
    // Deviation entries carry O(eps) absolute rounding noise, so L bottoms
    // out near 1e-30 regardless of the envelope; below 1e6 times that floor
    // the ratio measures noise. Stop at the first unresolvable record.
    if (L < 1e-24) break;
    const double log_env = log_L0 - half_rate * (st.t - t0);
    worst = std::max(worst, std::exp(std::log(L) - log_env));
  }
  return worst;
}

}  // namespace qsync
