#include "qsync/critical_coupling.hpp"

#include <algorithm>
#include <cmath>

#include "qsync/detail/scalar_lock.hpp"

namespace qsync {

Sensitivities sensitivities(const PhaseLockedState& pls,
                            const FrequencyEnsemble& ens, double kappa) {
  const int n = pls.size();
  if (n != ens.size()) throw std::invalid_argument("sensitivities: size mismatch");
  if (!(kappa > 0.0))
    throw std::invalid_argument("sensitivities: kappa must be positive");

  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double s = std::sin(pls.alpha[j]);
    const double c = std::cos(pls.alpha[j]);
    if (c < 1e-12) throw NumericalError("sensitivities: angle at pi/2");
    acc += s * s / c;
  }
  const double D = pls.lam - acc / static_cast<double>(n);
  if (std::abs(D) <= 1e-10)
    throw NumericalError("sensitivities: branch folding, kappa near threshold");

  Sensitivities out;
  out.dalpha1_dkappa = -pls.lam * std::tan(pls.alpha[0]) / (kappa * D);
  out.dlambda_dkappa = -pls.lam / kappa + pls.lam * pls.lam / (kappa * D);
  return out;
}

namespace {

std::vector<double> scaled_frequencies(const FrequencyEnsemble& ens, double kappa) {
  std::vector<double> u(ens.omega.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = ens.omega[j] / kappa;
  return u;
}

// Stable branch exists with margin g = lam - (1/(2N)) sum sec(alpha) > 0.
bool locks_with_margin(const FrequencyEnsemble& ens, double kappa) {
  const auto u = scaled_frequencies(ens, kappa);
  const auto root = detail::ScalarLock(u).stable();
  if (!root) return false;
  double sec_sum = 0.0;
  for (double v : u) {
    const double t = v / root->R;
    const double c = std::sqrt(std::max(1.0 - t * t, 0.0));
    if (c < 1e-15) return false;
    sec_sum += 1.0 / c;
  }
  const double g = root->R - sec_sum / (2.0 * static_cast<double>(u.size()));
  return g > 0.0;
}

}  // namespace

CriticalReport find_kappa_star(const FrequencyEnsemble& ens) {
  const double M = ens.mass();
  if (M <= 0.0)
    throw std::invalid_argument("find_kappa_star: all frequencies are zero");

  double lo = ens.max_abs();  // no locked state at or below max|Omega|
  double hi = 10.0 * M;
  while (!locks_with_margin(ens, hi)) {
    hi *= 2.0;
    if (hi > 1e4 * M)
      throw NumericalError("find_kappa_star: no locking below 1e4 * mass");
  }

  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (locks_with_margin(ens, mid))
      hi = mid;
    else
      lo = mid;
  }
  const double kappa_star = hi;

  // At the threshold the self-consistency curve is tangent to zero; the
  // tangency abscissa is the threshold order parameter.
  const auto u = scaled_frequencies(ens, kappa_star);
  const double lam = detail::ScalarLock(u).argmax();
  const double a_first = std::asin(std::clamp(u.front() / lam, -1.0, 1.0));
  const double a_last = std::asin(std::clamp(u.back() / lam, -1.0, 1.0));

  CriticalReport report;
  report.kappa_star = kappa_star;
  report.lambda_star = lam;
  report.opening_angle = a_first - a_last;
  report.method = CriticalMethod::bisection;
  return report;
}

FrequencyEnsemble make_two_cluster_ensemble(int N, int j, double M) {
  if (j < 1 || j >= N)
    throw std::invalid_argument("make_two_cluster_ensemble: need 1 <= j < N");
  if (!(M > 0.0))
    throw std::invalid_argument("make_two_cluster_ensemble: need M > 0");
  std::vector<double> omega(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i)
    omega[static_cast<std::size_t>(i)] =
        i < j ? M / (2.0 * j) : -M / (2.0 * (N - j));
  return make_ensemble(std::move(omega));
}

FrequencyEnsemble make_symmetric_triple_ensemble(int N, double M) {
  if (N < 2)
    throw std::invalid_argument("make_symmetric_triple_ensemble: need N >= 2");
  if (!(M > 0.0))
    throw std::invalid_argument("make_symmetric_triple_ensemble: need M > 0");
  std::vector<double> omega(static_cast<std::size_t>(N), 0.0);
  omega.front() = 0.5 * M;
  omega.back() = -0.5 * M;
  return make_ensemble(std::move(omega));
}

TwoClusterValues two_cluster_kappa_star(int N, int j, double M) {
  if (j < 1 || j >= N)
    throw std::invalid_argument("two_cluster_kappa_star: need 1 <= j < N");
  if (!(M > 0.0))
    throw std::invalid_argument("two_cluster_kappa_star: need M > 0");
  const double nj = static_cast<double>(N - j);
  const double jj = static_cast<double>(j);
  const double hyp = std::sqrt(nj * nj + jj * jj);
  TwoClusterValues v;
  v.kappa_star = static_cast<double>(N) * M / (2.0 * jj * nj);
  v.lambda_star = (jj * jj + nj * nj) / (static_cast<double>(N) * hyp);
  v.cos_alpha_1 = jj / hyp;
  v.cos_alpha_N = nj / hyp;
  return v;
}

SymmetricTripleValues symmetric_triple_kappa_star(int N, double M) {
  if (N < 2)
    throw std::invalid_argument("symmetric_triple_kappa_star: need N >= 2");
  if (!(M > 0.0))
    throw std::invalid_argument("symmetric_triple_kappa_star: need M > 0");
  const double n = static_cast<double>(N);
  const double s = std::sqrt(n * n - 4.0 * n + 36.0);
  SymmetricTripleValues v;
  v.kappa_star = 16.0 * n * M /
                 ((3.0 * (n - 2.0) + s) *
                  std::sqrt(24.0 + 8.0 * n - 2.0 * n * n + 2.0 * (n - 2.0) * s));
  v.lambda_star = (3.0 * (n - 2.0) + s) / (4.0 * n);
  const double cos_a1 = (-n + 2.0 + s) / 8.0;
  v.opening_angle = 2.0 * std::acos(std::clamp(cos_a1, -1.0, 1.0));
  return v;
}

KappaStarBounds kappa_star_bounds(int N, double M) {
  KappaStarBounds b;
  b.lower = 2.0 * M / static_cast<double>(N);
  b.middle = symmetric_triple_kappa_star(N, M).kappa_star;
  b.upper = M;
  return b;
}

}  // namespace qsync
