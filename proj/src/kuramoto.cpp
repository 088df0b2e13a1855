#include "qsync/kuramoto.hpp"

#include <cmath>
#include <complex>

#include "qsync/detail/integrate.hpp"
#include "qsync/detail/scalar_lock.hpp"

namespace qsync {

double wrap_angle(double x) {
  double w = std::remainder(x, 2.0 * M_PI);
  if (w >= M_PI) w -= 2.0 * M_PI;
  return w;
}

KuramotoState make_kuramoto_state(RealVector thetas, double t) {
  if (thetas.size() < 1) throw NumericalError("kuramoto state: empty");
  for (Eigen::Index j = 0; j < thetas.size(); ++j) {
    if (!std::isfinite(thetas(j)))
      throw NumericalError("kuramoto state: non-finite angle");
    thetas(j) = wrap_angle(thetas(j));
  }
  return KuramotoState{std::move(thetas), t};
}

RealVector kuramoto_rhs(const KuramotoState& state, const FrequencyEnsemble& ens,
                        double K) {
  const int n = state.size();
  if (n != ens.size()) throw NumericalError("kuramoto_rhs: size mismatch");
  RealVector d(n);
  const double c = K / static_cast<double>(n);
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int l = 0; l < n; ++l) sum += std::sin(state.thetas(l) - state.thetas(j));
    d(j) = ens.omega[j] + c * sum;
  }
  return d;
}

RealVector kuramoto_rhs_reduced(const KuramotoState& state,
                                const FrequencyEnsemble& ens, double K) {
  const int n = state.size();
  if (n != ens.size()) throw NumericalError("kuramoto_rhs: size mismatch");
  const auto [R, Phi] = kuramoto_order_parameter(state);
  RealVector d(n);
  for (int j = 0; j < n; ++j)
    d(j) = ens.omega[j] - K * R * std::sin(state.thetas(j) - Phi);
  return d;
}

std::pair<double, double> kuramoto_order_parameter(const KuramotoState& state) {
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index j = 0; j < state.thetas.size(); ++j)
    acc += std::exp(std::complex<double>(0.0, state.thetas(j)));
  acc /= static_cast<double>(state.thetas.size());
  return {std::abs(acc), std::arg(acc)};
}

std::optional<KuramotoFixedPoint> kuramoto_fixed_point(
    const FrequencyEnsemble& ens, double K) {
  if (!(K > 0.0)) throw NumericalError("kuramoto_fixed_point: K must be positive");
  std::vector<double> u(ens.omega.size());
  for (std::size_t j = 0; j < u.size(); ++j) u[j] = ens.omega[j] / K;
  const auto root = detail::ScalarLock(u).stable();
  if (!root) return std::nullopt;
  const int n = ens.size();
  RealVector thetas(n);
  for (int j = 0; j < n; ++j) thetas(j) = std::asin(u[j] / root->R);
  return KuramotoFixedPoint{std::move(thetas), root->R, root->residual};
}

KuramotoTrajectory integrate_kuramoto(const KuramotoState& state0,
                                      const FrequencyEnsemble& ens, double K,
                                      const SolverConfig& cfg) {
  if (state0.size() != ens.size())
    throw NumericalError("integrate_kuramoto: size mismatch");
  cfg.validate();

  const double sum0 = state0.thetas.sum();
  KuramotoTrajectory traj;
  traj.K = K;

  auto rhs = [&](const RealVector& th) {
    return kuramoto_rhs(KuramotoState{th, 0.0}, ens, K);
  };
  // Integration runs on unwrapped angles; wrapping happens at recording.
  auto post = [](RealVector&, double) {};
  auto record = [&](const RealVector& th, double t) {
    traj.sum_drift.push_back(std::abs(th.sum() - sum0));
    RealVector wrapped(th.size());
    for (Eigen::Index j = 0; j < th.size(); ++j) wrapped(j) = wrap_angle(th(j));
    traj.states.push_back(KuramotoState{std::move(wrapped), t});
  };

  RealVector y = state0.thetas;
  if (cfg.method == Method::rk4)
    detail::integrate_rk4(y, state0.t, cfg, rhs, post, record);
  else
    detail::integrate_rk45(y, state0.t, cfg, rhs, post, record);
  return traj;
}

}  // namespace qsync
