#include "qsync/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qsync {

double FrequencyEnsemble::max_abs() const {
  double m = 0.0;
  for (double w : omega) m = std::max(m, std::abs(w));
  return m;
}

double FrequencyEnsemble::mass() const {
  double s = 0.0;
  for (double w : omega) s += std::abs(w);
  return s;
}

FrequencyEnsemble make_ensemble(std::vector<double> raw) {
  if (raw.size() < 2)
    throw std::invalid_argument("make_ensemble: need at least 2 frequencies");
  for (double w : raw)
    if (!std::isfinite(w))
      throw std::invalid_argument("make_ensemble: non-finite frequency");
  const double mean =
      std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(raw.size());
  for (double& w : raw) w -= mean;
  std::sort(raw.begin(), raw.end(), std::greater<double>());
  return FrequencyEnsemble{std::move(raw)};
}

CorrelationState make_correlation_state(Matrix z, double t, double tol_ball,
                                        double tol_herm, double tol_diag) {
  const auto n = z.rows();
  if (n < 1 || z.cols() != n)
    throw std::invalid_argument("correlation state: matrix must be square");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::abs(z(j, j) - 1.0) > tol_diag)
      throw std::invalid_argument("correlation state: diagonal entry off unity");
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!std::isfinite(z(j, k).real()) || !std::isfinite(z(j, k).imag()))
        throw std::invalid_argument("correlation state: non-finite entry");
      if (std::abs(z(j, k)) > 1.0 + tol_ball)
        throw std::invalid_argument("correlation state: entry outside unit ball");
      if (k > j && std::abs(z(k, j) - std::conj(z(j, k))) > tol_herm)
        throw std::invalid_argument("correlation state: Hermitian symmetry violated");
    }
    z(j, j) = Complex(1.0, 0.0);
  }
  return CorrelationState{std::move(z), t};
}

PhaseLockedState make_phase_locked_state(std::vector<double> alpha, double lam) {
  const auto n = alpha.size();
  if (n < 2) throw std::invalid_argument("phase-locked state: need N >= 2");
  double sum_cos = 0.0, sum_sin = 0.0;
  for (double a : alpha) {
    if (!std::isfinite(a))
      throw std::invalid_argument("phase-locked state: non-finite angle");
    sum_cos += std::cos(a);
    sum_sin += std::sin(a);
  }
  const double nn = static_cast<double>(n);
  if (std::abs(sum_cos / nn - lam) > 1e-10)
    throw std::invalid_argument("phase-locked state: lam != mean cosine");
  if (std::abs(sum_sin / nn) > 1e-10)
    throw std::invalid_argument("phase-locked state: mean sine not zero");
  if (!(lam > 0.0 && lam <= 1.0 + 1e-12))
    throw std::invalid_argument("phase-locked state: lam outside (0, 1]");
  return PhaseLockedState{std::move(alpha), lam};
}

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("solver config: dt must be > 0");
  if (!(t_final > 0.0))
    throw std::invalid_argument("solver config: t_final must be > 0");
  if (record_every < 1)
    throw std::invalid_argument("solver config: record_every must be >= 1");
  if (method == Method::rk45 && (!(abs_tol > 0.0) || !(rel_tol > 0.0)))
    throw std::invalid_argument("solver config: rk45 tolerances must be > 0");
}

SolverConfig SolverConfig::defaults_for(double kappa, double t_final) {
  SolverConfig cfg;
  cfg.dt = 1e-3 / std::max(kappa, 1e-6);
  cfg.t_final = t_final;
  const double steps = t_final / cfg.dt;
  cfg.record_every = std::max(1, static_cast<int>(steps / 4000.0));
  return cfg;
}

}  // namespace qsync
