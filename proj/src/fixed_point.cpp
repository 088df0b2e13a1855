#include "qsync/fixed_point.hpp"

#include <algorithm>
#include <cmath>

#include "qsync/detail/scalar_lock.hpp"

namespace qsync {

std::optional<PhaseLockedState> solve_phase_locked(const FrequencyEnsemble& ens,
                                                   double kappa, Branch branch) {
  if (!(kappa > 0.0))
    throw NumericalError("solve_phase_locked: kappa must be positive");
  std::vector<double> u(ens.omega.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = ens.omega[j] / kappa;

  const detail::ScalarLock lock(u);
  const auto root = branch == Branch::stable ? lock.stable() : lock.unstable();
  if (!root) return std::nullopt;

  std::vector<double> alpha(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double s = std::clamp(u[j] / root->R, -1.0, 1.0);
    alpha[j] = std::asin(s);
  }
  return make_phase_locked_state(std::move(alpha), root->R);
}

CorrelationState correlations_from_phase_locked(const PhaseLockedState& pls) {
  const int n = pls.size();
  Vector e(n);
  for (int j = 0; j < n; ++j) e(j) = std::exp(Complex(0.0, pls.alpha[j]));
  Matrix z(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) z(j, k) = e(j) * std::conj(e(k));
  return make_correlation_state(std::move(z));
}

double fmap_residual(const CorrelationState& state, const FrequencyEnsemble& ens,
                     double kappa) {
  const int n = state.size();
  if (n != ens.size()) throw NumericalError("fmap_residual: size mismatch");
  if (!(kappa > 0.0)) throw NumericalError("fmap_residual: kappa must be positive");
  const Matrix& z = state.z;
  const double c = 1.0 / (2.0 * static_cast<double>(n));
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      Complex sum(0.0, 0.0);
      for (int l = 0; l < n; ++l) sum += z(j, l) + z(l, k);
      const Complex f = Complex(0.0, -(ens.omega[j] - ens.omega[k]) / kappa) * z(j, k)
                        - c * sum * (1.0 - z(j, k));
      worst = std::max(worst, std::abs(f));
    }
  }
  return worst;
}

RealVector kuramoto_correspondence(const PhaseLockedState& pls,
                                   const FrequencyEnsemble& ens, double kappa) {
  const int n = pls.size();
  if (n != ens.size())
    throw NumericalError("kuramoto_correspondence: size mismatch");

  auto residual = [&](double sigma) {
    double worst = 0.0;
    double mean_cos = 0.0;
    for (int j = 0; j < n; ++j) {
      const double th = sigma * pls.alpha[j];
      worst = std::max(worst,
                       std::abs(pls.lam * std::sin(th) - ens.omega[j] / kappa));
      mean_cos += std::cos(th);
    }
    mean_cos /= static_cast<double>(n);
    return std::max(worst, std::abs(pls.lam - mean_cos));
  };

  for (const double sigma : {1.0, -1.0}) {
    if (residual(sigma) < 1e-10) {
      RealVector thetas(n);
      for (int j = 0; j < n; ++j) thetas(j) = sigma * pls.alpha[j];
      return thetas;
    }
  }
  throw NumericalError(
      "kuramoto_correspondence: neither sign satisfies the locking identity");
}

}  // namespace qsync
